import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from twoscale.assembly import apply, assemble_operator, assemble_row
from twoscale.errors import DeskScaleError, InvalidParameterError
from twoscale.kernel import cosine_series, fractional_laplacian, make_regularized_kernel
from twoscale.mesh import BepsPolicy, build_graded_interval_mesh, build_graded_polygon_mesh
from twoscale.oracle import bump_field, eval_regularized_op, mesh_field
from twoscale.problems import UNIT_SQUARE


@pytest.fixture(scope="module")
def op1d():
    m = build_graded_interval_mesh(-1, 1, 2.0**-4, 2.0)
    return assemble_operator(m, fractional_laplacian(1, 0.5), BepsPolicy.linear())


@pytest.fixture(scope="module")
def op2d():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 2.0**-2, 2.0)
    return assemble_operator(m, cosine_series(0.4, [0.3, 0.1]), BepsPolicy.linear())


def test_diagonal_mass_closed_form():
    # vertex 0 of a uniform mesh on (-2, 2) has delta = 2, so general(0) gives b = 1
    m = build_graded_interval_mesh(-2, 2, 0.5, 1.0)
    z = int(np.argmin(np.abs(m.vertices[:, 0])))
    M, w = assemble_row(m, fractional_laplacian(1, 0.5), BepsPolicy.general(0.0), z)
    assert M == pytest.approx(2 / np.pi * (17 / 3 + 1), rel=1e-14)
    assert np.all(w >= 0) and w.sum() < M


def test_structure(op1d):
    assert op1d.n == 31 and op1d.A.shape == (31, 31)
    assert np.all(op1d.A >= 0)
    assert np.all(apply(op1d, np.zeros(31)) == 0)
    assert np.allclose(apply(op1d, np.ones(31)), op1d.row_defect)
    assert np.all(op1d.row_defect > 0)
    r = op1d.report
    assert r["negative_weights"] == 0 and r["nonpositive_defects"] == 0 and r["radius_in_bounds"]


def test_one_hot_column(op1d):
    z = 7
    e = np.zeros(op1d.n)
    e[z] = 1.0
    col = apply(op1d, e)
    assert col[z] == pytest.approx(op1d.M[z] - op1d.A[z, z], rel=1e-15)
    others = np.arange(op1d.n) != z
    assert np.allclose(col[others], -op1d.A[others, z], rtol=0, atol=0)


def test_row_defect_direct_integral(op1d):
    m = op1d.mesh
    xs = m.vertices[:, 0]
    c = 1 / np.pi
    for k in (0, 10, 15, 30):
        z = m.interior[k]
        x0 = xs[z]
        K = make_regularized_kernel(1, 0.5, op1d.radii[k])

        def g(x):
            ones = np.interp(x, xs, m.extend(np.ones(op1d.n)), left=0.0, right=0.0)
            return (1.0 - ones) * c * K(abs(x - x0))

        pts = sorted(set(xs.tolist() + [x0 - K.eps, x0 + K.eps]))
        inside = sum(integrate.quad(g, a, b, epsabs=0, epsrel=1e-12)[0] for a, b in zip(pts, pts[1:]))
        tails = c * sum(K.moment(0, d, np.inf) for d in (x0 + 1, 1 - x0))
        assert op1d.row_defect[k] == pytest.approx(inside + tails, rel=1e-9)


def test_mirror_symmetry(op1d):
    A = op1d.A
    assert np.allclose(A, A[::-1, ::-1], rtol=1e-12, atol=0)
    assert np.allclose(op1d.M, op1d.M[::-1], rtol=1e-13)


def _bump_agreement(op, w_field, rows):
    m = op.mesh
    u = w_field(m.interior_points())
    Lu = apply(op, u)
    w = mesh_field(m, u)
    for k in rows:
        z = m.vertices[m.interior[k]]
        ref = eval_regularized_op(w, op.spec, op.radii[k], z)
        assert Lu[k] == pytest.approx(ref, rel=1e-6, abs=1e-10 * abs(op.M[k] * u).max())


def test_bump_agrees_with_oracle_1d(op1d):
    _bump_agreement(op1d, bump_field(1, [0.1], 0.6), [3, 12, 15, 20])


def test_bump_agrees_with_oracle_2d(op2d):
    rows = np.argsort(op2d.mesh.delta[op2d.mesh.interior])[[0, op2d.n // 2, -1]]
    _bump_agreement(op2d, bump_field(2, [0.5, 0.45], 0.4), rows)


def test_2d_invariants(op2d):
    assert np.all(op2d.A >= 0)
    assert np.all(op2d.row_defect > 0)
    assert op2d.report["min_scaled_defect"] > 0


def test_angular_rules_agree():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 2.0**-2, 2.0)
    spec = cosine_series(0.6, [1.0, 0.4, 0.1])
    a = assemble_operator(m, spec, BepsPolicy.obstacle(), angular_order=8)
    b = assemble_operator(m, spec, BepsPolicy.obstacle(), angular_order=16)
    assert np.allclose(a.A, b.A, rtol=1e-10, atol=1e-12 * a.M.max())


def test_threads_deterministic():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 2.0**-2, 2.0)
    spec = fractional_laplacian(2, 0.5)
    a = assemble_operator(m, spec, BepsPolicy.linear(), threads=1)
    b = assemble_operator(m, spec, BepsPolicy.linear(), threads=3)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.M, b.M)


def test_desk_scale_guard():
    m = build_graded_interval_mesh(-1, 1, 2.0**-4, 2.0)
    with pytest.raises(DeskScaleError):
        assemble_operator(m, fractional_laplacian(1, 0.5), BepsPolicy.linear(), max_nodes=10)
    with pytest.raises(InvalidParameterError):
        assemble_operator(m, fractional_laplacian(2, 0.5), BepsPolicy.linear())
    with pytest.raises(InvalidParameterError):
        apply(assemble_operator(m, fractional_laplacian(1, 0.5), BepsPolicy.linear()), np.ones(3))


@given(st.floats(0.05, 0.95), st.sampled_from([2.0**-k for k in range(2, 7)]),
       st.floats(1.0, 2.5), st.sampled_from(["linear", "obstacle", "general(0.2)"]))
def test_monotone_structure_1d(s, h, mu, pol):
    m = build_graded_interval_mesh(-1, 1, h, mu)
    op = assemble_operator(m, fractional_laplacian(1, s), BepsPolicy.parse(pol))
    assert np.all(op.A >= 0)
    assert np.all(op.row_defect > 0)
    assert op.report["radius_in_bounds"]
