"""Hermitian trace-constrained SDPs over a few small blocks.

Problems are stated in inequality form,

    min  sum_b Tr{C_b X_b}
    s.t. sum_b Tr{A_mb X_b}  >= / <= / ==  r_m,    X_b psd Hermitian,

embedded into real symmetric blocks, converted to standard form with
nonnegative slacks (equalities become a >=/<= pair), and handed to the
self-dual interior-point engine in hsde. Dual multipliers are mapped back
so that inequality duals are nonnegative with the Lagrangian convention

    L = sum Tr{C X} - sum_{>=} lam (a.X - r) + sum_{<=} lam (a.X - r).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import hsde
from .numerics import ContractViolation, check_hermitian, hermitian_part

OPTIMAL = "Optimal"
PRIMAL_INFEASIBLE = "PrimalInfeasible"
NUMERICAL_FAILURE = "NumericalFailure"

SENSES = (">=", "<=", "==")


@dataclass
class TraceConstraint:
    """sum_b Tr{coeffs[b] X_b} (sense) rhs; None coefficient blocks are zero."""

    coeffs: list
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ContractViolation(f"sense must be one of {SENSES}, got {self.sense!r}")
        self.rhs = float(self.rhs)
        if not np.isfinite(self.rhs):
            raise ContractViolation("constraint rhs must be finite")


@dataclass
class SdpProblem:
    block_dims: list
    objective: list
    constraints: list

    def validate(self):
        if len(self.objective) != len(self.block_dims):
            raise ContractViolation("objective needs one matrix per block")
        for n, c in zip(self.block_dims, self.objective):
            check_hermitian(c)
            if c.shape != (n, n):
                raise ContractViolation(f"objective block is {c.shape}, expected {(n, n)}")
        for con in self.constraints:
            if len(con.coeffs) != len(self.block_dims):
                raise ContractViolation("constraint needs one coefficient entry per block")
            for n, a in zip(self.block_dims, con.coeffs):
                if a is None:
                    continue
                check_hermitian(a)
                if a.shape != (n, n):
                    raise ContractViolation(f"coefficient block is {a.shape}, expected {(n, n)}")
        return self


@dataclass
class SdpSolution:
    status: str
    blocks: list = None
    objective: float = None
    duals: np.ndarray = None
    kkt_residual: float = None
    iterations: int = 0
    info: dict = field(default_factory=dict)


@dataclass
class SdpOptions:
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    accept_feas: float = 1e-8
    accept_gap: float = 1e-7
    inf_tol: float = 1e-8
    max_iter: int = 200
    step_frac: float = 0.99

    def to_hsde(self):
        return hsde.SolverOptions(self.feas_tol, self.gap_tol, self.accept_feas,
                                  self.accept_gap, self.inf_tol, self.max_iter,
                                  self.step_frac)


def embed_block(a):
    """Hermitian n x n -> real symmetric 2n x 2n, [[Re, -Im], [Im, Re]]."""
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def embed_coeff(a):
    """Coefficient embedding, halved so Tr{A X} = Tr{embed_coeff(A) embed_block(X)}."""
    return embed_block(a) / 2.0


def recover_block(xr):
    """Inverse of embed_block, averaging the two redundant copies."""
    n = xr.shape[0] // 2
    re = (xr[:n, :n] + xr[n:, n:]) / 2
    im = (xr[n:, :n] - xr[:n, n:]) / 2
    return hermitian_part(re + 1j * im)


@dataclass
class RealSdp:
    """Real symmetric image of an SdpProblem under the Hermitian embedding."""

    block_dims: list
    objective: list
    constraints: list


def embed_hermitian_to_real(problem):
    problem.validate()
    dims = [2 * n for n in problem.block_dims]
    objective = [embed_coeff(c) for c in problem.objective]
    constraints = [
        TraceConstraint([None if a is None else embed_coeff(a) for a in con.coeffs],
                        con.sense, con.rhs)
        for con in problem.constraints
    ]
    return RealSdp(dims, objective, constraints)


def _standard_form(real):
    """Expand equalities into >=/<= pairs, equilibrate, add slacks, pack svec.

    Each row is divided by the norm of its coefficient vector (clamped to
    [1e-8, inf)), which keeps the Schur complement well conditioned. The
    returned rowmap[m] lists (standard row index, factor) pairs so that the
    original dual m is sum(factor * y[row]); factors carry both the
    inequality sign and the equilibration scale.
    """
    rows = []
    rowmap = []
    for con in real.constraints:
        if con.sense == "==":
            # net equality multiplier: y_ge + y_le (the <= row keeps
            # coefficient +a, so its standard-form dual is nonpositive)
            rowmap.append([(len(rows), 1.0), (len(rows) + 1, 1.0)])
            rows.append((con.coeffs, ">=", con.rhs))
            rows.append((con.coeffs, "<=", con.rhs))
        else:
            rowmap.append([(len(rows), 1.0 if con.sense == ">=" else -1.0)])
            rows.append((con.coeffs, con.sense, con.rhs))

    m = len(rows)
    cone = hsde.Cone(tuple(real.block_dims), nonneg=m)
    a = np.zeros((m, cone.dim))
    b = np.zeros(m)
    c = np.zeros(cone.dim)
    for blk, sl in zip(real.objective, cone.psd_slices):
        c[sl] = hsde.svec(blk)
    lin_start = cone.lin_slice.start
    scales = np.ones(m)
    for r, (coeffs, sense, rhs) in enumerate(rows):
        for blk, sl in zip(coeffs, cone.psd_slices):
            if blk is not None:
                a[r, sl] = hsde.svec(blk)
        scales[r] = max(np.linalg.norm(a[r]), 1e-8)
        a[r] /= scales[r]
        a[r, lin_start + r] = -1.0 if sense == ">=" else 1.0
        b[r] = rhs / scales[r]
    rowmap = [[(r, sign / scales[r]) for r, sign in parts] for parts in rowmap]
    return a, b, c, cone, rowmap


def solve_sdp(problem, options=None):
    """Solve an SdpProblem; see module docstring for conventions.

    Status Optimal additionally guarantees kkt_residual <= 1e-7 (otherwise
    the result is downgraded to NumericalFailure).
    """
    opts = options or SdpOptions()
    real = embed_hermitian_to_real(problem)
    a, b, c, cone, rowmap = _standard_form(real)
    res = hsde.solve_hsde(a, b, c, cone, opts.to_hsde())

    if res.status == hsde.PRIMAL_INFEASIBLE:
        duals = _map_duals(res.y, rowmap)
        return SdpSolution(PRIMAL_INFEASIBLE, duals=duals, iterations=res.iterations,
                           info=res.info)
    if res.status == hsde.DUAL_INFEASIBLE or res.x is None:
        return SdpSolution(NUMERICAL_FAILURE, iterations=res.iterations, info=res.info)

    # the engine's best point may satisfy the contract even when its own
    # (tighter) tolerances were not reached, so classify by the KKT check
    blocks = [recover_block(xm) for xm in cone.mats(res.x)]
    duals = _map_duals(res.y, rowmap)
    objective = float(sum(np.trace(cm @ xm).real
                          for cm, xm in zip(problem.objective, blocks)))
    sol = SdpSolution(OPTIMAL, blocks, objective, duals, None, res.iterations, res.info)
    sol.kkt_residual = check_kkt(problem, sol)
    if sol.kkt_residual > 1e-7:
        sol.status = NUMERICAL_FAILURE
    return sol


def _map_duals(y, rowmap):
    duals = np.zeros(len(rowmap))
    for i, parts in enumerate(rowmap):
        duals[i] = sum(factor * y[r] for r, factor in parts)
        if len(parts) == 1 and -1e-6 < duals[i] < 0:
            # inequality duals are nonnegative up to solver roundoff
            duals[i] = 0.0
    return duals


def constraint_value(con, blocks):
    return float(sum(np.trace(a @ x).real
                     for a, x in zip(con.coeffs, blocks) if a is not None))


def check_kkt(problem, solution):
    """Max KKT residual of an Optimal solution: primal/dual feasibility,
    per-constraint complementary slackness |lam * slack|, and the duality
    gap normalized by 1 + |objective|. Pure recomputation."""
    if solution.blocks is None:
        raise ContractViolation("check_kkt needs an optimal solution")
    blocks = solution.blocks
    duals = solution.duals
    resid = 0.0

    for x in blocks:
        lam_min = np.linalg.eigvalsh(hermitian_part(x)).min()
        resid = max(resid, -min(lam_min, 0.0))

    dual_obj = 0.0
    z = [c.astype(complex).copy() for c in problem.objective]
    for con, lam in zip(problem.constraints, duals):
        val = constraint_value(con, blocks)
        if con.sense == ">=":
            resid = max(resid, con.rhs - val, -min(lam, 0.0), abs(lam * (val - con.rhs)))
            sign = 1.0
        elif con.sense == "<=":
            resid = max(resid, val - con.rhs, -min(lam, 0.0), abs(lam * (val - con.rhs)))
            sign = -1.0
        else:
            resid = max(resid, abs(val - con.rhs))
            sign = 1.0
        dual_obj += sign * lam * con.rhs
        for b, a in enumerate(con.coeffs):
            if a is not None:
                z[b] -= sign * lam * a

    for zb in z:
        lam_min = np.linalg.eigvalsh(hermitian_part(zb)).min()
        resid = max(resid, -min(lam_min, 0.0))

    pobj = float(sum(np.trace(cm @ xm).real
                     for cm, xm in zip(problem.objective, blocks)))
    resid = max(resid, abs(pobj - dual_obj) / (1.0 + abs(pobj)))
    return float(resid)


def _matrix_to_json(a):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(a, dtype=complex)]


def dump_problem_json(problem, path=None):
    """Debug dump for offline cross-checking against an external solver."""
    doc = {
        "block_dims": [int(n) for n in problem.block_dims],
        "objective": [_matrix_to_json(c) for c in problem.objective],
        "constraints": [
            {
                "coeffs": [None if a is None else _matrix_to_json(a) for a in con.coeffs],
                "sense": con.sense,
                "rhs": con.rhs,
            }
            for con in problem.constraints
        ],
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
    return doc
