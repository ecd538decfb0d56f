"""Linear, obstacle and HJB solvers for the assembled dense M-matrix systems."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _numerics as nm
from .assembly import apply
from .errors import ConvergenceError, InvalidParameterError, NonMonotoneError

DIRECT_LIMIT = 2048


def default_tol(op):
    return 1e-10 if op.mesh.d == 1 else 1e-8


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    final_residual: float
    history: list
    wallclock: float
    converged: bool = True
    method: str = ""
    meta: dict = field(default_factory=dict)


@dataclass
class ObstacleData:
    psi_h: np.ndarray
    f: np.ndarray
    psi_boundary: np.ndarray | None = None

    def __post_init__(self):
        self.psi_h = np.asarray(self.psi_h, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.psi_h.shape != self.f.shape:
            raise InvalidParameterError("obstacle and right-hand side differ in length")
        if self.psi_boundary is not None and np.any(np.asarray(self.psi_boundary) >= 0):
            raise InvalidParameterError("the obstacle must be negative on the boundary")


def _vector(op, v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (op.n,):
        raise InvalidParameterError(f"{name} must have length {op.n}, got shape {v.shape}")
    return v


def solve_linear(op, f, tol=None, max_iter=200_000, method="gs", u0=None):
    """Solve ``L_h u = f``.

    ``method="gs"`` runs Gauss-Seidel sweeps in vertex order until the
    sup-norm residual is below ``tol``; ``method="direct"`` factorizes the
    dense matrix (allowed for ``n <= 2048``).
    """
    f = _vector(op, f, "f")
    tol = default_tol(op) if tol is None else tol
    L = op.matrix
    t0 = time.perf_counter()
    if method == "direct":
        if op.n > DIRECT_LIMIT:
            raise InvalidParameterError(f"direct solve limited to n <= {DIRECT_LIMIT}")
        u = scipy.linalg.solve(L, f, check_finite=False)
        res = float(np.max(np.abs(L @ u - f), initial=0.0))
        return SolveReport(u, 1, res, [res], time.perf_counter() - t0, res <= tol, "direct")
    if method != "gs":
        raise InvalidParameterError(f"unknown linear method {method!r}")
    u = np.zeros(op.n) if u0 is None else _vector(op, u0, "u0").copy()
    history = []
    res = float(np.max(np.abs(L @ u - f), initial=0.0))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"Gauss-Seidel stopped after {max_iter} sweeps with residual {res:.3e}", history)
        nm.gs_sweep(L, f, u, 1)
        it += 1
        res = float(np.max(np.abs(L @ u - f)))
        history.append(res)
    return SolveReport(u, it, res, history, time.perf_counter() - t0, True, "gauss-seidel")


def complementarity_residual(op, u, f, psi):
    return float(np.max(np.abs(np.minimum(apply(op, u) - f, u - psi)), initial=0.0))


def solve_obstacle(op, data, tol=None, max_iter=500_000, u0=None, linear=None):
    """Projected Gauss-Seidel for ``min(L_h u - f, u - psi) = 0``.

    The default start is the linear solution raised to the obstacle, which
    lies below the solution, so the sweeps increase monotonically.
    """
    f = _vector(op, data.f, "f")
    psi = _vector(op, data.psi_h, "psi")
    tol = default_tol(op) if tol is None else tol
    L = op.matrix
    t0 = time.perf_counter()
    if u0 is None:
        if linear is None:
            method = "direct" if op.n <= DIRECT_LIMIT else "gs"
            linear = solve_linear(op, f, tol=0.1 * tol, method=method).solution
        u = np.maximum(linear, psi)
    else:
        u = np.maximum(_vector(op, u0, "u0"), psi)
    history = []
    res = complementarity_residual(op, u, f, psi)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"projected Gauss-Seidel stopped after {max_iter} sweeps, residual {res:.3e}",
                history)
        nm.pgs_sweep(L, f, psi, u, 1)
        it += 1
        res = complementarity_residual(op, u, f, psi)
        history.append(res)
    return SolveReport(u, it, res, history, time.perf_counter() - t0, True,
                       "projected-gauss-seidel",
                       {"contact_nodes": int(np.count_nonzero(u - psi <= tol))})


# ---------------------------------------------------------------------------
# HJB


def hjb_residual(op1, op2, f, u):
    f = _vector(op1, f, "f")
    r = np.minimum(apply(op1, u) - f, apply(op2, u) - f)
    return float(np.max(np.abs(r), initial=0.0))


def quadratic_supersolution(ops, f, A=0.0, center=None):
    """Nodal ``U = (A/2)|x - c|^2 + B`` with the smallest ``B`` making every
    ``L_i U >= f``.

    The constant part is lifted through the row defects (the discrete
    barrier), so any curvature ``A`` works; ``A <= 0`` keeps ``U`` bounded
    by ``B``.  Returns ``(U, A, B)``; the inequality is re-checked.
    """
    mesh = ops[0].mesh
    f = _vector(ops[0], f, "f")
    X = mesh.interior_points()
    c = X.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    Q = 0.5 * A * np.sum((X - c) ** 2, axis=1)
    B = 0.0
    for op in ops:
        need = (f - apply(op, Q)) / op.row_defect
        B = max(B, float(np.max(need)))
    U = Q + B
    for op in ops:
        gap = apply(op, U) - f
        if np.min(gap) < -1e-9 * max(1.0, np.max(np.abs(f))):
            raise ConvergenceError("quadratic supersolution failed its nodal check")
    return U, float(A), B


@dataclass
class HJBReport(SolveReport):
    iterates: list = field(default_factory=list)
    supersolution: np.ndarray | None = None
    operator_sequence: list = field(default_factory=list)


def solve_hjb(op1, op2, f, inner_tol=None, outer_tol=None, max_outer=500, supersolution=None,
              keep_iterates=True):
    """Monotone obstacle iteration for ``min(L_1 u, L_2 u) = f``.

    ``u_0`` solves the linear problem for ``L_1``; step ``k`` solves the
    obstacle problem for ``L_i`` with ``i = (k mod 2) + 1`` and obstacle
    ``u_{k-1}``.
    """
    if op1.mesh is not op2.mesh or op1.n != op2.n:
        raise InvalidParameterError("both operators must live on the same mesh")
    f = _vector(op1, f, "f")
    inner_tol = default_tol(op1) * 0.01 if inner_tol is None else inner_tol
    outer_tol = default_tol(op1) if outer_tol is None else outer_tol
    t0 = time.perf_counter()
    ops = (op1, op2)
    method = "direct" if op1.n <= DIRECT_LIMIT else "gs"
    linear = [solve_linear(op, f, tol=0.1 * inner_tol, method=method).solution for op in ops]
    if supersolution is None:
        supersolution = quadratic_supersolution(ops, f)[0]
    u = linear[0]
    iterates = [u.copy()]
    history = [hjb_residual(op1, op2, f, u)]
    sequence = [1]
    sweeps = 0
    for k in range(1, max_outer + 1):
        i = k % 2 + 1
        rep = solve_obstacle(ops[i - 1], ObstacleData(u, f), tol=inner_tol,
                             linear=linear[i - 1])
        sweeps += rep.iterations
        new = rep.solution
        drop = float(np.max(u - new))
        if drop > 10.0 * inner_tol:
            raise NonMonotoneError(f"iterate {k} decreased by {drop:.3e}")
        step = float(np.max(np.abs(new - u)))
        u = new
        res = hjb_residual(op1, op2, f, u)
        history.append(res)
        sequence.append(i)
        if keep_iterates:
            iterates.append(u.copy())
        if step <= outer_tol and res <= outer_tol:
            return HJBReport(u, k, res, history, time.perf_counter() - t0, True, "obstacle-iteration",
                             {"inner_sweeps": sweeps}, iterates, supersolution, sequence)
    raise ConvergenceError(f"HJB iteration did not converge in {max_outer} outer steps", history)
