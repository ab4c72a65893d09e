"""Dense complex linear-algebra kernels shared by all beamforming modules.

Everything here is a pure function of its inputs (LAPACK through numpy is
deterministic for identical input bits), so results are reproducible and
safe to call concurrently.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

HERMITIAN_RTOL = 1e-12
RANK_RTOL = 1e-10
PSD_EIG_FLOOR = -1e-10


class ContractViolation(ValueError):
    """An input violates a documented precondition."""


class NotHermitian(ContractViolation):
    pass


class NotPositiveSemidefinite(ContractViolation):
    pass


class NotPositiveDefinite(ContractViolation):
    pass


def as_matrix(a):
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ContractViolation(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def hermitian_part(a):
    """Return (A + A^H)/2."""
    a = as_matrix(a)
    return (a + a.conj().T) / 2


def check_hermitian(a, rtol=HERMITIAN_RTOL):
    """Raise NotHermitian unless max|A - A^H| <= rtol * max|A|."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotHermitian(f"matrix is {a.shape}, not square")
    scale = np.abs(a).max() if a.size else 0.0
    dev = np.abs(a - a.conj().T).max() if a.size else 0.0
    if dev > rtol * max(scale, 1e-300):
        raise NotHermitian(f"asymmetry {dev:.3e} exceeds {rtol:.1e} * max|A| = {rtol * scale:.3e}")
    return a


def hermitian_evd(a, rtol=HERMITIAN_RTOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with real eigenvalues sorted in
    descending order and eigenvectors as the matching columns, so that
    A = V diag(lam) V^H.
    """
    a = check_hermitian(a, rtol)
    lam, vec = np.linalg.eigh(hermitian_part(a))
    return lam[::-1].copy(), vec[:, ::-1].copy()


def numerical_rank(a, rel_tol=RANK_RTOL):
    """Number of singular values above rel_tol * sigma_max * max(rows, cols)."""
    if rel_tol <= 0:
        raise ContractViolation("rel_tol must be > 0")
    a = as_matrix(a)
    if a.size == 0:
        return 0
    sigma = np.linalg.svd(a, compute_uv=False)
    thresh = rel_tol * sigma[0] * max(a.shape)
    return int(np.count_nonzero(sigma > thresh))


def psd_sqrt(a, eig_floor=PSD_EIG_FLOOR, rtol=HERMITIAN_RTOL):
    """Hermitian PSD square root S with S @ S = A.

    Eigenvalues in [eig_floor, 0) are clamped to zero (SDP solutions carry
    roundoff); anything below eig_floor raises NotPositiveSemidefinite.
    """
    lam, vec = hermitian_evd(a, rtol)
    if lam.size and lam[-1] < eig_floor:
        raise NotPositiveSemidefinite(f"eigenvalue {lam[-1]:.3e} below floor {eig_floor:.1e}")
    lam = np.maximum(lam, 0.0)
    s = (vec * np.sqrt(lam)) @ vec.conj().T
    return hermitian_part(s)


def max_generalized_eigvec(s, a, rtol=HERMITIAN_RTOL):
    """Unit vector v maximizing the generalized Rayleigh quotient (v^H S v)/(v^H A v).

    Computed by whitening: with A = L L^H (Cholesky), the principal
    eigenvector u of L^{-1} S L^{-H} maps back as v = L^{-H} u.
    """
    s = check_hermitian(s, rtol)
    a = check_hermitian(a, rtol)
    try:
        chol = np.linalg.cholesky(hermitian_part(a))
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefinite("Cholesky failed; matrix is not positive definite") from err
    tmp = scipy.linalg.solve_triangular(chol, hermitian_part(s), lower=True)
    m = scipy.linalg.solve_triangular(chol, tmp.conj().T, lower=True).conj().T
    _, vec = hermitian_evd(hermitian_part(m))
    u = vec[:, 0]
    v = scipy.linalg.solve_triangular(chol.conj().T, u, lower=False)
    return v / np.linalg.norm(v)
