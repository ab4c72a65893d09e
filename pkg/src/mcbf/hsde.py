"""Interior-point solver for small dense symmetric-cone programs.

Solves the standard-form pair

    min  c.x   s.t.  A x = b,  x in K          (primal)
    max  b.y   s.t.  A'y + s = c,  s in K      (dual)

where K is a product of real PSD blocks plus a nonnegative orthant, with
matrix variables held in svec coordinates (off-diagonals scaled by sqrt(2)
so the trace inner product is the ordinary dot product).

The algorithm is a Nesterov-Todd scaled Mehrotra predictor-corrector on the
homogeneous self-dual model

    A x - b tau          = 0
    -A'y + c tau - s     = 0
    b.y - c.x - kappa    = 0
    x, s in K, tau, kappa >= 0

so that tau -> positive yields an optimal pair (x, y, s)/tau while
tau -> 0 with kappa > 0 yields a Farkas infeasibility certificate
(b.y > 0 for primal infeasibility). All arithmetic is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
NUMERICAL = "numerical_failure"

_SQRT2 = np.sqrt(2.0)
_SVEC_META = {}


def _svec_meta(n):
    """Cached (rows, cols, scale, P) for dimension n, with svec(M) = P vec(M)."""
    meta = _SVEC_META.get(n)
    if meta is None:
        rows, cols = np.tril_indices(n)
        scale = np.where(rows == cols, 1.0, _SQRT2)
        p = np.zeros((rows.size, n * n))
        for r, (i, j) in enumerate(zip(rows, cols)):
            if i == j:
                p[r, i * n + j] = 1.0
            else:
                p[r, i * n + j] = 1.0 / _SQRT2
                p[r, j * n + i] = 1.0 / _SQRT2
        _SVEC_META[n] = meta = (rows, cols, scale, p)
    return meta


def svec(m):
    """Pack a symmetric matrix into svec coordinates."""
    n = m.shape[0]
    rows, cols, scale, _ = _svec_meta(n)
    return m[rows, cols] * scale


def smat(v, n):
    """Unpack svec coordinates into a symmetric matrix."""
    rows, cols, scale, _ = _svec_meta(n)
    m = np.zeros((n, n))
    m[rows, cols] = v / scale
    m[cols, rows] = m[rows, cols]
    return m


def svec_dim(n):
    return n * (n + 1) // 2


def svec_identity(n):
    return svec(np.eye(n))


@dataclass
class Cone:
    """Product of PSD blocks (svec packed) followed by a nonnegative orthant."""

    psd_dims: tuple
    nonneg: int = 0

    def __post_init__(self):
        self.psd_dims = tuple(int(n) for n in self.psd_dims)
        offs = []
        pos = 0
        for n in self.psd_dims:
            offs.append(slice(pos, pos + svec_dim(n)))
            pos += svec_dim(n)
        self.psd_slices = offs
        self.lin_slice = slice(pos, pos + self.nonneg)
        self.dim = pos + self.nonneg
        self.degree = sum(self.psd_dims) + self.nonneg

    def identity(self):
        e = np.zeros(self.dim)
        for n, sl in zip(self.psd_dims, self.psd_slices):
            e[sl] = svec_identity(n)
        e[self.lin_slice] = 1.0
        return e

    def mats(self, x):
        return [smat(x[sl], n) for n, sl in zip(self.psd_dims, self.psd_slices)]

    def min_eig(self, x):
        worst = np.inf
        for n, sl in zip(self.psd_dims, self.psd_slices):
            worst = min(worst, np.linalg.eigvalsh(smat(x[sl], n)).min())
        if self.nonneg:
            lin = x[self.lin_slice]
            if lin.size:
                worst = min(worst, lin.min())
        return worst


@dataclass
class SolverOptions:
    feas_tol: float = 1e-10
    gap_tol: float = 1e-10
    accept_feas: float = 1e-8
    accept_gap: float = 1e-7
    inf_tol: float = 1e-8
    max_iter: int = 200
    step_frac: float = 0.99


@dataclass
class HsdeResult:
    status: str
    x: np.ndarray = None
    y: np.ndarray = None
    s: np.ndarray = None
    iterations: int = 0
    info: dict = field(default_factory=dict)


class _Scaling:
    """Nesterov-Todd scaling at (x, s): per PSD block a factor G with
    W = G G', W S W = X, and G^{-1} X G^{-T} = G' S G = diag(lam)."""

    def __init__(self, cone, x, s):
        self.cone = cone
        self.G = []
        self.Gi = []
        self.lam_psd = []
        self.hinv = []  # svec-coordinate matrix of U -> W U W
        for n, sl in zip(cone.psd_dims, cone.psd_slices):
            xm = smat(x[sl], n)
            sm = smat(s[sl], n)
            lx = np.linalg.cholesky(xm)
            m = lx.T @ sm @ lx
            d, u = np.linalg.eigh((m + m.T) / 2)
            if d[0] <= 0:
                raise np.linalg.LinAlgError("NT scaling lost positive definiteness")
            droot = d ** 0.25
            g = (lx @ u) / droot
            gi = (u.T @ scipy.linalg.solve_triangular(lx, np.eye(n), lower=True)) * droot[:, None]
            w = g @ g.T
            _, _, _, p = _svec_meta(n)
            self.G.append(g)
            self.Gi.append(gi)
            self.lam_psd.append(np.sqrt(d))
            self.hinv.append(p @ np.kron(w, w) @ p.T)
        lin = cone.lin_slice
        self.w_lin = np.sqrt(x[lin] / s[lin]) if cone.nonneg else np.zeros(0)
        self.lam_lin = np.sqrt(x[lin] * s[lin]) if cone.nonneg else np.zeros(0)

    def apply_hinv(self, u):
        out = np.empty_like(u)
        for sl, k in zip(self.cone.psd_slices, self.hinv):
            out[sl] = k @ u[sl]
        out[self.cone.lin_slice] = self.w_lin ** 2 * u[self.cone.lin_slice]
        return out

    def apply_hinv_rows(self, a):
        """Hinv applied to each row of a dense matrix (for A Hinv A')."""
        out = np.empty_like(a)
        for sl, k in zip(self.cone.psd_slices, self.hinv):
            out[:, sl] = a[:, sl] @ k
        out[:, self.cone.lin_slice] = a[:, self.cone.lin_slice] * self.w_lin ** 2
        return out


def _max_step_psd(chol, dm):
    """Largest alpha with X + alpha dX psd, given X = chol chol'."""
    y = scipy.linalg.solve_triangular(chol, dm, lower=True)
    b = scipy.linalg.solve_triangular(chol, y.T, lower=True)
    lam_min = np.linalg.eigvalsh((b + b.T) / 2).min()
    return np.inf if lam_min >= -1e-300 else -1.0 / lam_min


def _max_step(cone, chols, x, dx):
    alpha = np.inf
    for (n, sl), chol in zip(zip(cone.psd_dims, cone.psd_slices), chols):
        alpha = min(alpha, _max_step_psd(chol, smat(dx[sl], n)))
    if cone.nonneg:
        lin_x = x[cone.lin_slice]
        lin_d = dx[cone.lin_slice]
        neg = lin_d < 0
        if np.any(neg):
            alpha = min(alpha, float((-lin_x[neg] / lin_d[neg]).min()))
    return alpha


def solve_hsde(a, b, c, cone, options=None):
    """Run the self-dual interior-point iteration; see module docstring.

    a is (m, cone.dim) dense, b is (m,), c is (cone.dim,). On OPTIMAL the
    returned (x, y, s) are already divided by tau; on PRIMAL_INFEASIBLE the
    returned y, s hold the Farkas certificate normalized to b.y = 1.
    """
    opts = options or SolverOptions()
    a = np.ascontiguousarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m = a.shape[0]
    nu = cone.degree

    scale = 1.0 + (np.abs(b).max() if b.size else 0.0)
    e = cone.identity()
    x = scale * e
    s = scale * e
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    bnorm = np.abs(b).max() if b.size else 0.0
    cnorm = np.abs(c).max() if c.size else 0.0

    best = None  # (score, x, y, s, tau, info)
    stall = 0
    mu_prev = np.inf
    alpha_last = 1.0
    status = NUMERICAL
    info = {}
    it = 0

    for it in range(1, opts.max_iter + 1):
        rp = a @ x - b * tau
        rd = -(a.T @ y) + c * tau - s
        rg = b @ y - c @ x - kappa
        mu = (x @ s + tau * kappa) / (nu + 1)

        # convergence bookkeeping on the tau-scaled point
        xh, yh, sh = x / tau, y / tau, s / tau
        pobj = c @ xh
        dobj = b @ yh
        pres = np.abs(a @ xh - b).max() / (1.0 + bnorm) if m else 0.0
        dres = np.abs(c - a.T @ yh - sh).max() / (1.0 + cnorm)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        score = max(pres, dres, relgap)
        cur_info = {"pres": pres, "dres": dres, "relgap": relgap,
                    "pobj": pobj, "dobj": dobj, "tau": tau, "kappa": kappa, "mu": mu}
        if best is None or score < best[0]:
            best = (score, x / tau, y / tau, s / tau, tau, cur_info)

        if pres <= opts.feas_tol and dres <= opts.feas_tol and relgap <= opts.gap_tol:
            status, info = OPTIMAL, cur_info
            x, y, s = xh, yh, sh
            break

        # Farkas certificate tests
        by = b @ y
        if by > 0:
            inf_res = np.abs(c * tau - rd).max() / by
            if inf_res <= opts.inf_tol * (1.0 + cnorm) and tau <= 1e-2:
                status = PRIMAL_INFEASIBLE
                info = {**cur_info, "certificate_residual": inf_res}
                y = y / by
                s = s / by
                break
        cx = c @ x
        if cx < 0:
            unb_res = (np.abs(a @ x).max() if m else 0.0) / (-cx)
            if unb_res <= opts.inf_tol * (1.0 + bnorm) and tau <= 1e-2:
                status = DUAL_INFEASIBLE
                info = {**cur_info, "certificate_residual": unb_res}
                x = x / (-cx)
                break

        if mu > 0.9 * mu_prev or alpha_last < 1e-8:
            stall += 1
            if stall >= 6:
                break
        else:
            stall = 0
        mu_prev = mu

        try:
            sc = _Scaling(cone, x, s)
            chols_x = [np.linalg.cholesky(xm) for xm in cone.mats(x)]
            chols_s = [np.linalg.cholesky(sm) for sm in cone.mats(s)]

            ah = sc.apply_hinv_rows(a)
            schur = ah @ a.T
            schur_chol = scipy.linalg.cho_factor((schur + schur.T) / 2, lower=True)
            hc = sc.apply_hinv(c)
            ahc = a @ hc
            u1 = scipy.linalg.cho_solve(schur_chol, ahc + b) if m else np.zeros(0)
            coef = (b @ u1 - ahc @ u1 + c @ hc + kappa / tau) if m else (c @ hc + kappa / tau)

            def newton_raw(r1, r2, r3, tvec, r5):
                rhs_x = r2 + tvec
                hrhs = sc.apply_hinv(rhs_x)
                u2 = scipy.linalg.cho_solve(schur_chol, r1 - a @ hrhs) if m else np.zeros(0)
                dtau = (r3 + r5 / tau - b @ u2 + c @ hrhs + ahc @ u2) / coef
                dy = u2 + dtau * u1
                dx = sc.apply_hinv(rhs_x + a.T @ dy - c * dtau)
                ds = -r2 - a.T @ dy + c * dtau
                dkappa = (r5 - kappa * dtau) / tau
                return dx, dy, ds, dtau, dkappa

            def newton(r1, r2, r3, tvec, r5):
                # one pass of iterative refinement mops up Schur-solve error,
                # which otherwise stalls feasibility around sqrt(eps)
                dx, dy, ds, dtau, dkappa = newton_raw(r1, r2, r3, tvec, r5)
                for _ in range(2):
                    e1 = r1 - (a @ dx - b * dtau)
                    e3 = r3 - (b @ dy - c @ dx - dkappa)
                    if (np.abs(e1).max() if m else 0.0) < 1e-13 and abs(e3) < 1e-13:
                        break
                    fx, fy, fs, ftau, fkappa = newton_raw(e1, np.zeros_like(c), e3,
                                                          np.zeros_like(c), 0.0)
                    dx += fx
                    dy += fy
                    ds += fs
                    dtau += ftau
                    dkappa += fkappa
                return dx, dy, ds, dtau, dkappa

            # predictor: aim at full residual and complementarity elimination.
            # In scaled space -lam o lam folds back to exactly -s.
            dx_a, dy_a, ds_a, dtau_a, dkap_a = newton(-rp, -rd, -rg, -s, -tau * kappa)

            alpha_a = min(_max_step(cone, chols_x, x, dx_a),
                          _max_step(cone, chols_s, s, ds_a))
            if dtau_a < 0:
                alpha_a = min(alpha_a, -tau / dtau_a)
            if dkap_a < 0:
                alpha_a = min(alpha_a, -kappa / dkap_a)
            alpha_a = min(1.0, alpha_a)
            mu_aff = ((x + alpha_a * dx_a) @ (s + alpha_a * ds_a)
                      + (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkap_a)) / (nu + 1)
            sigma = min(1.0, max(0.0, mu_aff / mu) ** 3)

            # corrector with Mehrotra second-order terms. The centering and
            # complementarity parts fold back exactly to sigma*mu*X^{-1} - S,
            # which avoids the cancellation incurred by a round trip through
            # the scaled space; only the second-order term needs it.
            tvec = np.empty_like(x)
            for (n, sl), g, gi, lam, lx in zip(zip(cone.psd_dims, cone.psd_slices),
                                               sc.G, sc.Gi, sc.lam_psd, chols_x):
                dxt = gi @ smat(dx_a[sl], n) @ gi.T
                dst = g.T @ smat(ds_a[sl], n) @ g
                corr = (dxt @ dst + dst @ dxt) / 2
                z = corr / ((lam[:, None] + lam[None, :]) / 2)
                xinv = scipy.linalg.cho_solve((lx, True), np.eye(n))
                t = sigma * mu * xinv - smat(s[sl], n) - gi.T @ z @ gi
                tvec[sl] = svec((t + t.T) / 2)
            if cone.nonneg:
                lsl = cone.lin_slice
                so_corr = dx_a[lsl] * ds_a[lsl]  # (dx/w)*(w ds) = dx*ds
                tvec[lsl] = sigma * mu / x[lsl] - s[lsl] - so_corr / x[lsl]
            eta = 1.0 - sigma
            r5 = sigma * mu - tau * kappa - dtau_a * dkap_a
            dx, dy, ds, dtau, dkappa = newton(-eta * rp, -eta * rd, -eta * rg, tvec, r5)

            alpha = min(_max_step(cone, chols_x, x, dx),
                        _max_step(cone, chols_s, s, ds))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            alpha = min(1.0, opts.step_frac * alpha)
            if alpha < 1e-13:
                break
            alpha_last = alpha

            x = x + alpha * dx
            y = y + alpha * dy
            s = s + alpha * ds
            tau = tau + alpha * dtau
            kappa = kappa + alpha * dkappa
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, FloatingPointError):
            break

    if status in (OPTIMAL, PRIMAL_INFEASIBLE, DUAL_INFEASIBLE):
        return HsdeResult(status, x, y, s, it, info)

    # no certificate: fall back to the best scaled iterate seen
    score, bx, by_, bs, btau, binfo = best
    if (binfo["pres"] <= opts.accept_feas and binfo["dres"] <= opts.accept_feas
            and binfo["relgap"] <= opts.accept_gap):
        return HsdeResult(OPTIMAL, bx, by_, bs, it, binfo)
    return HsdeResult(NUMERICAL, bx, by_, bs, it, binfo)
