"""Convergence-study runners shared by the command line and the tests."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_operator
from .errors import CertificationError
from .freeboundary import (estimate_c_psi, extract_free_boundary, hausdorff_distance,
                           level_height, ndp_probe, projection_error_scale, resample)
from .kernel import fractional_laplacian, kernel_invariants, make_regularized_kernel
from .mesh import BepsPolicy, build_graded_interval_mesh, build_graded_polygon_mesh
from .oracle import exact_ball_solution
from .problems import UNIT_SQUARE, build_mesh, bump_obstacle_1d, check_interior_contact, hjb_iso_aniso_2d
from .rates import fit_rate
from .solvers import ObstacleData, solve_hjb, solve_linear, solve_obstacle

__all__ = ["StudyResult", "fit_rate", "kernel_selftest", "linear_convergence",
           "obstacle_convergence", "free_boundary_study", "smoke_rate_2d", "reference_convergence",
           "obstacle_solution", "hjb_study"]


@dataclass
class StudyResult:
    kind: str
    columns: list
    rows: list
    slope: float = float("nan")
    r2: float = float("nan")
    passed: bool | None = None
    details: dict = field(default_factory=dict)
    wallclock: float = 0.0

    def column(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])


def kernel_selftest(s_values=(0.1, 0.25, 0.5, 0.75, 0.9), dims=(1, 2), eps_values=(1e-3, 1e-1, 1.0),
                    tol=1e-12):
    t0 = time.perf_counter()
    names = None
    rows = []
    for d in dims:
        for s in s_values:
            for eps in eps_values:
                inv = kernel_invariants(make_regularized_kernel(d, s, eps))
                names = list(inv)
                rows.append([d, s, eps, *inv.values()])
    worst = max(max(r[3:]) for r in rows)
    return StudyResult("kernel-selftest", ["d", "s", "eps", *names], rows, passed=worst <= tol,
                       details={"worst_residual": worst}, wallclock=time.perf_counter() - t0)


def _solve_method(n):
    return "direct" if n <= 2048 else "gs"


def linear_convergence(s=0.5, mu=2.0, hs=tuple(2.0**-k for k in range(3, 8)), policy=None,
                       threads=1, slope_window=None, method=None):
    """Ball problem in 1D: sup-norm nodal error against the certified exact solution."""
    t0 = time.perf_counter()
    policy = policy or BepsPolicy.linear()
    spec = fractional_laplacian(1, s)
    exact = exact_ball_solution(1, s)
    rows = []
    for h in hs:
        mesh = build_graded_interval_mesh(-1.0, 1.0, h, mu)
        op = assemble_operator(mesh, spec, policy, threads=threads)
        rep = solve_linear(op, np.ones(op.n), method=method or _solve_method(op.n))
        err = float(np.max(np.abs(exact.u(mesh.interior_points()) - rep.solution)))
        rows.append([h, op.n, err])
    slope, r2 = fit_rate([r[0] for r in rows], [r[2] for r in rows])
    passed = None if slope_window is None else slope_window[0] <= slope <= slope_window[1]
    return StudyResult("linear-convergence", ["h", "N", "error"], rows, slope, r2, passed,
                       {"lambda": exact.lam, "s": s, "mu": mu, "solution": (mesh, rep.solution)},
                       time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# obstacle family


_OBSTACLE_CACHE = {}


def obstacle_solution(h, s=0.5, mu=2.0, problem=None, spec=None, policy=None, threads=1):
    """Cached obstacle solve: ``(mesh, psi_h, u_h, report)``.

    Defaults to the bump problem with the fractional Laplacian and ``b = h_z / 2``.
    Results are keyed by the problem and kernel names, so reuse them only for
    distinct names.
    """
    problem = problem or bump_obstacle_1d()
    d = 1 if np.ndim(problem.domain) == 1 else 2
    spec = spec or fractional_laplacian(d, s)
    policy = policy or BepsPolicy.obstacle()
    key = (float(h), float(s), float(mu), problem.name, spec.name, spec.lam, spec.Lam, str(policy))
    hit = _OBSTACLE_CACHE.get(key)
    if hit is not None:
        return hit
    mesh = build_mesh(problem.domain, h, mu)
    op = assemble_operator(mesh, spec, policy, threads=threads)
    X = mesh.interior_points()
    psi_h = problem.psi(X)
    rep = solve_obstacle(op, ObstacleData(psi_h, problem.f(X)))
    _OBSTACLE_CACHE[key] = out = (mesh, psi_h, rep.solution, rep)
    return out


def obstacle_convergence(s=0.5, mu=2.0, hs=tuple(2.0**-k for k in range(3, 8)), ref_h=2.0**-9,
                         problem=None, spec=None, policy=None, threads=1, slope_min=None):
    """Sup-norm error at reference nodes of the interpolated coarse solutions."""
    t0 = time.perf_counter()
    ref_mesh, ref_psi, ref_u, _ = obstacle_solution(ref_h, s, mu, problem, spec, policy, threads)
    if not check_interior_contact(ref_mesh, ref_u, ref_psi, 1e-10):
        raise CertificationError(
            f"reference contact set of {ref_mesh.n_interior}-node run is empty, split or "
            "touches the boundary")
    Xr = ref_mesh.interior_points()
    rows = []
    for h in hs:
        mesh, psi_h, u, rep = obstacle_solution(h, s, mu, problem, spec, policy, threads)
        err = float(np.max(np.abs(mesh.interpolate(u, Xr) - ref_u)))
        rows.append([h, mesh.n_interior, err, rep.iterations])
    slope, r2 = fit_rate([r[0] for r in rows], [r[2] for r in rows])
    passed = None if slope_min is None else slope >= slope_min
    return StudyResult("obstacle-convergence", ["h", "N", "error", "sweeps"], rows, slope, r2,
                       passed, {"ref_h": ref_h, "solution": (mesh, u), "obstacle": psi_h},
                       time.perf_counter() - t0)


def free_boundary_study(s=0.5, mu=2.0, hs=tuple(2.0**-k for k in range(3, 8)), ref_h=2.0**-10,
                        problem=None, spec=None, policy=None, C_delta=None, C_psi=None,
                        threads=1, exponent_min=None, strip_width=0.2):
    """Hausdorff distance of the level-set free boundaries to the reference one.

    ``C_delta`` defaults to ``max_h ||u_ref - u_h|| / max(h^(mu s), h^(1-s))``
    over the family; ``C_psi`` to the sampled ``|psi|_{W^{2,inf}}``.
    """
    t0 = time.perf_counter()
    prob = problem or bump_obstacle_1d()
    ref_mesh, ref_psi, ref_u, _ = obstacle_solution(ref_h, s, mu, prob, spec, policy, threads)
    Xr = ref_mesh.interior_points()
    ref_fb = extract_free_boundary(ref_mesh, ref_u, ref_psi, 1e-10)
    ref_gamma = resample(ref_fb, ref_h**2)
    ref_contact = ref_u - ref_psi <= 1e-10
    family = [obstacle_solution(h, s, mu, prob, spec, policy, threads) for h in hs]
    errs = [float(np.max(np.abs(m.interpolate(u, Xr) - ref_u))) for m, _, u, _ in family]
    if C_delta is None:
        C_delta = max(e / projection_error_scale(h, mu, s) for h, e in zip(hs, errs))
    if C_psi is None:
        if np.ndim(prob.domain) == 1:
            lo, hi = prob.domain
        else:
            P = np.asarray(prob.domain)
            lo, hi = P.min(axis=0), P.max(axis=0)
        C_psi = estimate_c_psi(prob.psi, lo, hi)
    rows = []
    inclusion = True
    for h, (mesh, psi_h, u, _), e in zip(hs, family, errs):
        level = level_height(h, mu, s, C_delta, C_psi)
        fb = extract_free_boundary(mesh, u, psi_h, level)
        dH = hausdorff_distance(ref_gamma, resample(fb, h**2))
        gap = mesh.interpolate(u, Xr) - mesh.interpolate(psi_h, Xr)
        inc = bool(np.all(gap[ref_contact] <= level))
        inclusion &= inc
        rows.append([h, mesh.n_interior, level, dH, e, int(inc)])
    slope, r2 = fit_rate([r[2] for r in rows], [r[3] for r in rows])
    dh = [r[3] for r in rows]
    monotone = all(b < a for a, b in zip(dh, dh[1:]))
    a_est, n_strip = ndp_probe(ref_mesh, ref_u, ref_psi, strip_width, s)
    passed = None
    if exponent_min is not None:
        passed = monotone and inclusion and slope >= exponent_min
    return StudyResult("free-boundary", ["h", "N", "level", "hausdorff", "error", "inclusion"],
                       rows, slope, r2, passed,
                       {"C_delta": C_delta, "C_psi": C_psi, "monotone": monotone,
                        "inclusion": inclusion, "ndp_a": a_est, "ndp_samples": n_strip,
                        "gamma_ref": ref_fb.boundary_points.ravel().tolist(), "ref_h": ref_h},
                       time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# reference-solution studies (2D smoke test)


def _linear_solve(domain, h, s, mu, spec, f, policy, threads, max_nodes):
    mesh = build_mesh(domain, h, mu)
    op = assemble_operator(mesh, spec, policy, threads=threads, max_nodes=max_nodes)
    rhs = np.ones(op.n) if f is None else f(mesh.interior_points())
    rep = solve_linear(op, rhs, method=_solve_method(op.n))
    return mesh, rep.solution


def reference_convergence(domain, s=0.5, mu=2.0, hs=(2.0**-2, 2.0**-3, 2.0**-4), ref_h=2.0**-6,
                          spec=None, f=None, policy=None, threads=1, max_nodes=None,
                          slope_min=None, kind="reference-convergence"):
    """Linear problem without a closed form: errors against a finer solution."""
    t0 = time.perf_counter()
    policy = policy or BepsPolicy.linear()
    spec = spec or fractional_laplacian(1 if np.ndim(domain) == 1 else 2, s)
    args = (s, mu, spec, f, policy, threads, max_nodes)
    ref_mesh, ref_u = _linear_solve(domain, ref_h, *args)
    Xr = ref_mesh.interior_points()
    rows = []
    for h in hs:
        mesh, u = _linear_solve(domain, h, *args)
        err = float(np.max(np.abs(mesh.interpolate(u, Xr) - ref_u)))
        rows.append([h, mesh.n_interior, err])
    slope, r2 = fit_rate([r[0] for r in rows], [r[2] for r in rows])
    errs = [r[2] for r in rows]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    passed = None if slope_min is None else (monotone and slope >= slope_min)
    return StudyResult(kind, ["h", "N", "error"], rows, slope, r2, passed,
                       {"ref_h": ref_h, "ref_N": ref_mesh.n_interior, "monotone": monotone,
                        "solution": (mesh, u)},
                       time.perf_counter() - t0)


def smoke_rate_2d(s=0.5, mu=2.0, hs=(2.0**-2, 2.0**-3, 2.0**-4), ref_h=2.0**-6, policy=None,
                  threads=1, max_nodes=None, slope_min=None):
    """Unit square with ``f = 1``."""
    return reference_convergence(UNIT_SQUARE, s, mu, hs, ref_h, policy=policy, threads=threads,
                                 max_nodes=max_nodes, slope_min=slope_min, kind="smoke-2d")


def hjb_study(s=0.5, mu=2.0, h=2.0**-3, amplitude=0.5, inner_tol=1e-10, outer_tol=1e-8,
              policy=None, threads=1):
    """Iso/aniso HJB on the unit square with ``f = 1``."""
    t0 = time.perf_counter()
    policy = policy or BepsPolicy.linear()
    iso, aniso, square = hjb_iso_aniso_2d(s, amplitude)
    mesh = build_graded_polygon_mesh(square, h, mu)
    op1 = assemble_operator(mesh, iso, policy, threads=threads)
    op2 = assemble_operator(mesh, aniso, policy, threads=threads)
    f = np.ones(op1.n)
    rep = solve_hjb(op1, op2, f, inner_tol=inner_tol, outer_tol=outer_tol)
    its = rep.iterates
    drops = [float(np.max(a - b)) for a, b in zip(its, its[1:])]
    above = float(np.max(rep.solution - rep.supersolution))
    rows = [[k, i, r] for k, (i, r) in enumerate(zip(rep.operator_sequence, rep.history))]
    monotone = all(dr <= 10 * inner_tol for dr in drops)
    passed = monotone and above <= 10 * inner_tol and rep.final_residual <= outer_tol
    return StudyResult("hjb", ["k", "operator", "hjb_residual"], rows, passed=passed,
                       details={"N": op1.n, "outer_iterations": rep.iterations,
                                "final_residual": rep.final_residual,
                                "max_decrease": max(drops, default=0.0),
                                "max_above_supersolution": above, "monotone": monotone,
                                "report": rep, "mesh": mesh, "ops": (op1, op2)},
                       wallclock=time.perf_counter() - t0)
