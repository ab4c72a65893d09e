import numpy as np
import pytest

from mcbf.numerics import (
    ContractViolation,
    NotHermitian,
    NotPositiveDefinite,
    NotPositiveSemidefinite,
    hermitian_evd,
    hermitian_part,
    max_generalized_eigvec,
    numerical_rank,
    psd_sqrt,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return hermitian_part(a)


def random_psd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T


class TestHermitianEvd:
    def test_identity(self):
        lam, _ = hermitian_evd(np.eye(3))
        np.testing.assert_allclose(lam, np.ones(3))

    def test_diagonal(self):
        lam, vec = hermitian_evd(np.diag([5.0, 2.0]))
        np.testing.assert_allclose(lam, [5.0, 2.0])
        # coordinate axes up to phase
        assert abs(abs(vec[0, 0]) - 1) < 1e-12
        assert abs(abs(vec[1, 1]) - 1) < 1e-12

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = random_hermitian(rng, 4)
            lam, vec = hermitian_evd(a)
            rec = (vec * lam) @ vec.conj().T
            tol = 1e-10 * (1 + np.abs(lam).max())
            assert np.abs(rec - a).max() <= tol
            assert np.abs(vec.conj().T @ vec - np.eye(4)).max() <= 1e-10
            assert np.all(np.diff(lam) <= 1e-12)

    def test_trace_matches_eigenvalue_sum(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = random_hermitian(rng, 5)
            lam, _ = hermitian_evd(a)
            assert abs(lam.sum() - np.trace(a).real) <= 1e-10 * (1 + np.abs(lam).max())

    def test_rejects_non_hermitian(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NotHermitian):
            hermitian_evd(a)


class TestNumericalRank:
    def test_below_threshold(self):
        assert numerical_rank(np.diag([1.0, 1e-14])) == 1

    def test_full_rank_rectangular(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
        assert numerical_rank(a) == 3

    def test_dependent_rows(self):
        row = np.array([1.0 + 1j, 2.0, -0.5j])
        a = np.vstack([row, 2 * row])
        assert numerical_rank(a) == 1

    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((3, 3))) == 0

    def test_unitary_invariance(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a[3] = a[0] + a[1]  # rank 3, well away from threshold
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        assert numerical_rank(q @ a) == numerical_rank(a) == 3

    def test_bad_tolerance(self):
        with pytest.raises(ContractViolation):
            numerical_rank(np.eye(2), rel_tol=0.0)


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_square_residual(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = random_psd(rng, 4)
            s = psd_sqrt(a)
            assert np.abs(s @ s - a).max() <= 1e-9 * (1 + np.abs(a).max())
            # commutes with a
            assert np.abs(s @ a - a @ s).max() <= 1e-9 * (1 + np.abs(a).max())

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveSemidefinite):
            psd_sqrt(np.diag([1.0, -0.5]))

    def test_clamps_roundoff(self):
        s = psd_sqrt(np.diag([1.0, -1e-12]))
        np.testing.assert_allclose(s, np.diag([1.0, 0.0]), atol=1e-9)


class TestMaxGeneralizedEigvec:
    def test_identity_reduces_to_evd(self):
        rng = np.random.default_rng(5)
        s = random_psd(rng, 3)
        v = max_generalized_eigvec(s, np.eye(3))
        lam, vec = hermitian_evd(s)
        align = abs(np.vdot(vec[:, 0], v))
        assert abs(align - 1) < 1e-10

    def test_rank_one_closed_form(self):
        rng = np.random.default_rng(6)
        svec = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        a = random_psd(rng, 3) + 0.5 * np.eye(3)
        v = max_generalized_eigvec(np.outer(svec, svec.conj()), a)
        expected = np.linalg.solve(a, svec)
        expected /= np.linalg.norm(expected)
        assert abs(abs(np.vdot(expected, v)) - 1) < 1e-8

    def test_beats_random_sampling(self):
        rng = np.random.default_rng(7)
        s = random_psd(rng, 3)
        a = random_psd(rng, 3) + 0.1 * np.eye(3)

        def quotient(w):
            return (w.conj() @ s @ w).real / (w.conj() @ a @ w).real

        v = max_generalized_eigvec(s, a)
        best = quotient(v)
        samples = rng.standard_normal((10_000, 3)) + 1j * rng.standard_normal((10_000, 3))
        for w in samples:
            assert quotient(w / np.linalg.norm(w)) <= best + 1e-10

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        s = random_psd(rng, 3)
        a = random_psd(rng, 3) + 0.1 * np.eye(3)
        v1 = max_generalized_eigvec(s, a)
        v2 = max_generalized_eigvec(7.5 * s, a)
        assert abs(abs(np.vdot(v1, v2)) - 1) < 1e-8

    def test_rejects_singular(self):
        with pytest.raises(NotPositiveDefinite):
            max_generalized_eigvec(np.eye(2), np.diag([1.0, 0.0]))
