import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoscale.errors import GradingAuditError, InvalidParameterError
from twoscale.mesh import (BepsPolicy, audit_grading, beps, beps_radius, beps_values,
                           build_graded_interval_mesh, build_graded_polygon_mesh, inradius,
                           polygon_distance)
from twoscale.problems import UNIT_SQUARE

TRIANGLE = np.array([[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]])


def test_interval_first_node():
    m = build_graded_interval_mesh(-1.0, 1.0, 0.5, 2.0)
    x = m.vertices[:, 0]
    assert x[1] + 1.0 == pytest.approx(0.25)
    assert 1.0 - x[-2] == pytest.approx(0.25)
    assert np.all(np.diff(x) > 0)


def test_interval_uniform():
    m = build_graded_interval_mesh(-1.0, 1.0, 0.25, 1.0)
    assert np.allclose(m.element_sizes(), 0.25)
    assert m.audit["C_g"] == 1.0


def test_interval_graded_audit():
    m = build_graded_interval_mesh(-1.0, 1.0, 2.0**-4, 2.0)
    a = m.audit
    assert a["C_g"] <= 4.0
    assert a["hz_le_delta"]
    far = np.min(m.delta[m.elements], axis=1) > 0
    hT = m.element_sizes()[far]
    dist = np.min(m.delta[m.elements], axis=1)[far]
    ratio = hT / (m.h * dist**0.5)
    assert ratio.min() >= 0.25 and ratio.max() <= 4.0


@given(st.floats(-3, 3), st.floats(0.1, 5), st.sampled_from([2.0**-k for k in range(2, 8)]),
       st.floats(1.0, 3.0))
def test_interval_invariants(a, length, h, mu):
    m = build_graded_interval_mesh(a, a + length, h, mu)
    x = m.vertices[:, 0]
    assert x[0] == a and x[-1] == a + length
    assert np.all(np.diff(x) > 0)
    assert np.all(m.delta[m.interior] > 0) and np.all(m.delta[m.boundary] == 0)
    assert np.all(m.h_z[m.interior] <= m.delta[m.interior])


def test_interval_errors():
    with pytest.raises(InvalidParameterError):
        build_graded_interval_mesh(0.0, 1e-17, 0.1, 2)
    with pytest.raises(InvalidParameterError):
        build_graded_interval_mesh(0.0, 1.0, 1.5, 2)
    with pytest.raises(InvalidParameterError):
        build_graded_interval_mesh(0.0, 1.0, 0.1, 0.5)


def test_square_quasi_uniform():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 0.5, 1.0)
    assert 0.5 * 0.5**-2 <= m.n_vertices <= 4 * 0.5**-2


def test_square_boundary_layer():
    h = 2.0**-3
    m = build_graded_polygon_mesh(UNIT_SQUARE, h, 2.0)
    touching = np.min(m.delta[m.elements], axis=1) == 0
    sizes = m.element_sizes()[touching]
    ratio = sizes / h**2
    assert ratio.min() >= 0.5 and ratio.max() <= 4.0
    assert 0.5 <= np.median(ratio) <= 2.0
    assert m.audit["C_g"] <= 10 and m.audit["min_angle_deg"] >= 15


def test_square_node_count_law():
    hs = [2.0**-k for k in range(2, 6)]
    ratios = []
    for h in hs:
        m = build_graded_polygon_mesh(UNIT_SQUARE, h, 2.0)
        ratios.append(m.n_vertices / (h**-2 * abs(np.log(h))))
    assert max(ratios) / min(ratios) <= 4.0


def test_polygon_mesh_geometry():
    m = build_graded_polygon_mesh(TRIANGLE, 0.25, 1.5)
    P = m.vertices[m.elements]
    area = 0.5 * np.abs((P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1])
                        - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0]))
    assert np.all(area > 0)
    assert area.sum() == pytest.approx(1.5, rel=1e-12)
    assert np.allclose(m.delta, polygon_distance(m.domain, m.vertices), atol=1e-12)
    assert np.all(m.h_z[m.interior] <= m.delta[m.interior] * (1 + 1e-12))


def test_polygon_errors():
    with pytest.raises(InvalidParameterError):
        build_graded_polygon_mesh([[0, 0], [2, 0], [1, 0.2], [1, 2]], 0.25, 2.0)
    with pytest.raises(InvalidParameterError):
        build_graded_polygon_mesh(UNIT_SQUARE, 0.25, 2.5)


def test_inradius_square():
    assert inradius(UNIT_SQUARE) == pytest.approx(0.5)


def test_grading_family_uniform():
    cg = [build_graded_interval_mesh(-1, 1, 2.0**-k, 2.0).audit["C_g"] for k in range(2, 8)]
    assert max(cg) <= 4.0
    cg2 = [build_graded_polygon_mesh(UNIT_SQUARE, 2.0**-k, 2.0).audit["C_g"] for k in range(2, 5)]
    assert max(cg2) <= 10.0


def test_grading_audit_error():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 0.25, 2.0)
    report = audit_grading(m, limit=1.01)
    assert report["violations"]
    with pytest.raises(GradingAuditError):
        from twoscale import mesh as meshmod
        old = meshmod.GRADING_LIMIT
        meshmod.GRADING_LIMIT = 1.01
        try:
            build_graded_polygon_mesh(UNIT_SQUARE, 0.25, 2.0)
        finally:
            meshmod.GRADING_LIMIT = old


def test_beps_formulas():
    assert beps_radius(BepsPolicy.linear(), 0.01, 0.25) == pytest.approx(0.025)
    m = build_graded_interval_mesh(-1, 1, 2.0**-4, 2.0)
    for z in m.interior[::5]:
        ob = beps(BepsPolicy.obstacle(), m, z)
        assert ob == pytest.approx(0.5 * m.h_z[z])
        assert beps(BepsPolicy.general(1.0), m, z) == pytest.approx(ob)
        assert beps(BepsPolicy.general(0.0), m, z) == pytest.approx(0.5 * m.delta[z])
    with pytest.raises(InvalidParameterError):
        beps(BepsPolicy.linear(), m, m.boundary[0])


@given(st.sampled_from(["linear", "obstacle", "general(0.3)", "general(0.8)"]),
       st.sampled_from([2.0**-k for k in range(2, 7)]))
def test_beps_bounds(text, h):
    pol = BepsPolicy.parse(text)
    m = build_graded_interval_mesh(-1, 1, h, 2.0)
    b = beps_values(pol, m)
    iz = m.interior
    assert np.all(b >= 0.5 * m.h_z[iz] * (1 - 1e-12))
    assert np.all(b <= 0.5 * m.delta[iz] * (1 + 1e-12))


def test_beps_bounds_2d():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 2.0**-3, 2.0)
    b = beps_values(BepsPolicy.linear(), m)
    iz = m.interior
    assert np.all((b >= 0.5 * m.h_z[iz] * (1 - 1e-12)) & (b <= 0.5 * m.delta[iz] * (1 + 1e-12)))


def test_policy_parse():
    assert str(BepsPolicy.parse("general(0.25)")) == "general(0.25)"
    with pytest.raises(InvalidParameterError):
        BepsPolicy.parse("bogus")
    with pytest.raises(InvalidParameterError):
        BepsPolicy.general(1.5)


def test_interpolate_reproduces_linear():
    m = build_graded_polygon_mesh(UNIT_SQUARE, 0.25, 2.0)
    f = lambda P: 1 + 2 * P[:, 0] - P[:, 1]
    u = f(m.interior_points())
    # boundary values are zero, so compare only on triangles away from the boundary
    full = m.extend(u)
    full[m.boundary] = f(m.vertices[m.boundary])
    inner = np.all(m.delta[m.elements] > 0, axis=1)
    cent = m.vertices[m.elements[inner]].mean(axis=1)
    from twoscale.mesh import _interpolate_2d
    assert np.allclose(_interpolate_2d(m, full, cent), f(cent), atol=1e-12)
    assert m.interpolate(u, np.array([[2.0, 2.0]]))[0] == 0.0
