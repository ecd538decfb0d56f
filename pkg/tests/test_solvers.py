import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoscale.assembly import apply, assemble_operator
from twoscale.errors import ConvergenceError, InvalidParameterError
from twoscale.kernel import fractional_laplacian
from twoscale.mesh import BepsPolicy, build_graded_interval_mesh, build_graded_polygon_mesh
from twoscale.oracle import exact_ball_solution, obstacle_active_set
from twoscale.problems import UNIT_SQUARE, hjb_iso_aniso_2d
from twoscale.solvers import (ObstacleData, complementarity_residual, hjb_residual,
                              quadratic_supersolution, solve_hjb, solve_linear, solve_obstacle)


def _op(h=2.0**-4, s=0.5, policy=None):
    m = build_graded_interval_mesh(-1, 1, h, 2.0)
    return assemble_operator(m, fractional_laplacian(1, s), policy or BepsPolicy.linear())


@pytest.fixture(scope="module")
def op():
    return _op()


@pytest.fixture(scope="module")
def hjb_ops():
    iso, aniso, sq = hjb_iso_aniso_2d(0.5)
    m = build_graded_polygon_mesh(sq, 2.0**-2, 2.0)
    return (assemble_operator(m, iso, BepsPolicy.linear()),
            assemble_operator(m, aniso, BepsPolicy.linear()))


def test_zero_rhs(op):
    rep = solve_linear(op, np.zeros(op.n))
    assert rep.iterations == 0 and np.all(rep.solution == 0)


def test_barrier_inversion(op):
    for method in ("gs", "direct"):
        rep = solve_linear(op, op.row_defect, method=method)
        assert np.allclose(rep.solution, 1.0, atol=1e-9)


def test_gs_matches_direct(op):
    f = np.ones(op.n)
    a = solve_linear(op, f, tol=1e-12).solution
    b = solve_linear(op, f, method="direct").solution
    assert np.allclose(a, b, atol=1e-11)


def test_linear_error_decreases():
    ex = exact_ball_solution(1, 0.5)
    errs = []
    for k in (3, 4, 5, 6):
        o = _op(2.0**-k)
        u = solve_linear(o, np.ones(o.n), method="direct").solution
        errs.append(np.max(np.abs(ex.u(o.mesh.interior_points()) - u)))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_linear_errors(op):
    with pytest.raises(InvalidParameterError):
        solve_linear(op, np.ones(3))
    with pytest.raises(InvalidParameterError):
        solve_linear(op, np.ones(op.n), method="cg")
    with pytest.raises(ConvergenceError) as exc:
        solve_linear(op, np.ones(op.n), tol=1e-14, max_iter=3)
    assert len(exc.value.history) == 3


@given(st.integers(0, 10**6))
def test_discrete_comparison_linear(seed):
    op = _CACHED["op"]
    rng = np.random.default_rng(seed)
    g = rng.normal(size=op.n)
    f = g + rng.uniform(0, 1, op.n) * (rng.uniform(size=op.n) < 0.5)
    u = solve_linear(op, f, method="direct").solution
    v = solve_linear(op, g, method="direct").solution
    assert np.all(u >= v - 1e-10)


@given(st.integers(0, 10**6))
def test_discrete_comparison_obstacle(seed):
    op = _CACHED["op"]
    rng = np.random.default_rng(seed)
    x = op.mesh.interior_points()[:, 0]
    psi_lo = 0.3 - 2 * x**2 + 0.05 * rng.normal(size=op.n)
    psi_hi = psi_lo + rng.uniform(0, 0.1, op.n)
    g = rng.normal(size=op.n)
    f = g + rng.uniform(0, 1, op.n)
    u = solve_obstacle(op, ObstacleData(psi_hi, f)).solution
    v = solve_obstacle(op, ObstacleData(psi_lo, g)).solution
    assert np.all(u >= v - 1e-10)


_CACHED = {"op": _op(2.0**-3)}


def test_inactive_obstacle_equals_linear(op):
    f = np.ones(op.n)
    lin = solve_linear(op, f, method="direct").solution
    rep = solve_obstacle(op, ObstacleData(np.full(op.n, -1.0), f))
    assert rep.iterations == 0
    assert np.allclose(rep.solution, lin, atol=1e-12)


def test_obstacle_matches_active_set():
    o = _op(2.0**-5, policy=BepsPolicy.obstacle())
    x = o.mesh.interior_points()[:, 0]
    psi = 0.5 - 2 * x**2
    f = np.zeros(o.n)
    rep = solve_obstacle(o, ObstacleData(psi, f))
    ref = obstacle_active_set(o.matrix, f, psi)
    assert np.max(np.abs(rep.solution - ref)) <= 1e-8
    assert rep.meta["contact_nodes"] > 0
    assert complementarity_residual(o, rep.solution, f, psi) <= 1e-10


def test_obstacle_data_validation():
    with pytest.raises(InvalidParameterError):
        ObstacleData(np.zeros(3), np.zeros(4))
    with pytest.raises(InvalidParameterError):
        ObstacleData(np.zeros(3), np.zeros(3), psi_boundary=np.array([0.0, -1.0]))


def test_hjb_residual_examples(op, hjb_ops):
    assert hjb_residual(op, op, np.ones(op.n), np.zeros(op.n)) == 1.0
    o1, o2 = hjb_ops
    f = np.ones(o1.n)
    u = solve_linear(o1, f, method="direct").solution
    if np.all(apply(o2, u) >= f):
        assert hjb_residual(o1, o2, f, u) <= 1e-12


def test_hjb_equal_operators(op):
    f = np.ones(op.n)
    rep = solve_hjb(op, op, f)
    lin = solve_linear(op, f, method="direct").solution
    assert rep.iterations == 1
    assert np.max(np.abs(rep.solution - lin)) <= 1e-9


def test_hjb_zero_rhs(hjb_ops):
    rep = solve_hjb(*hjb_ops, np.zeros(hjb_ops[0].n))
    assert np.all(rep.solution == 0)


def test_hjb_iso_aniso(hjb_ops):
    o1, o2 = hjb_ops
    f = np.ones(o1.n)
    inner = 1e-10
    rep = solve_hjb(o1, o2, f, inner_tol=inner, outer_tol=1e-8)
    its = rep.iterates
    for a, b in zip(its, its[1:]):
        assert np.all(b >= a - 10 * inner)
    for u in its:
        assert np.all(u <= rep.supersolution + 10 * inner)
        r = np.minimum(apply(o1, u), apply(o2, u)) - f
        assert np.all(r <= 10 * inner)
    assert rep.final_residual <= 1e-8
    assert rep.operator_sequence[:4] == [1, 2, 1, 2]


def test_quadratic_supersolution(hjb_ops):
    f = np.ones(hjb_ops[0].n)
    for A in (0.0, -1.0, 2.0):
        U, _, B = quadratic_supersolution(hjb_ops, f, A=A)
        for o in hjb_ops:
            assert np.all(apply(o, U) >= f - 1e-9)
