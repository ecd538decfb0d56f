import numpy as np
import pytest

from twoscale import io
from twoscale.assembly import assemble_operator
from twoscale.errors import InvalidParameterError
from twoscale.expr import Expression, parse_number
from twoscale.kernel import fractional_laplacian
from twoscale.mesh import BepsPolicy, build_graded_interval_mesh, build_graded_polygon_mesh
from twoscale.problems import UNIT_SQUARE
from twoscale.solvers import solve_linear


def test_expression_evaluation():
    e = Expression("0.5 - 2*x^2 + sin(y) * exp(-abs(x)) / sqrt(4)")
    P = np.array([[0.3, 0.2], [-1.0, 1.0]])
    want = 0.5 - 2 * P[:, 0] ** 2 + np.sin(P[:, 1]) * np.exp(-np.abs(P[:, 0])) / 2
    assert np.allclose(e(P), want, rtol=1e-15)
    assert np.all(Expression("3")(np.zeros((4, 1))) == 3.0)
    assert parse_number("2^-5") == 2.0**-5
    assert parse_number(" 1e-3 ") == 1e-3


@pytest.mark.parametrize("bad", ["__import__('os')", "x.real", "z + 1", "open(x)", "[1, 2]",
                                 "x if y else 1", "lambda: 1", "1 +"])
def test_expression_rejects(bad):
    with pytest.raises(InvalidParameterError):
        Expression(bad)


def test_parse_number_not_finite():
    with pytest.raises(InvalidParameterError):
        parse_number("1/0")


def test_mesh_and_operator_roundtrip(tmp_path):
    m = build_graded_polygon_mesh(UNIT_SQUARE, 0.25, 2.0)
    io.write_mesh(m, tmp_path / "sq")
    V, E = io.read_mesh_arrays(tmp_path / "sq")
    assert np.array_equal(V, m.vertices) and np.array_equal(E, m.elements)
    m1 = build_graded_interval_mesh(-1, 1, 0.25, 2.0)
    op = assemble_operator(m1, fractional_laplacian(1, 0.5), BepsPolicy.linear())
    io.write_operator(op, tmp_path / "op.csv")
    assert np.array_equal(io.read_operator(tmp_path / "op.csv"), op.matrix)
    assert "policy=linear" in (tmp_path / "op.csv").read_text().splitlines()[0]


def test_vtk_and_solution(tmp_path):
    m = build_graded_interval_mesh(-1, 1, 0.25, 2.0)
    op = assemble_operator(m, fractional_laplacian(1, 0.5), BepsPolicy.linear())
    rep = solve_linear(op, np.ones(op.n), method="direct")
    text = io.write_vtk(m, tmp_path / "u.vtk", {"u": rep.solution}).read_text()
    assert f"POINTS {m.n_vertices} double" in text and "SCALARS u double 1" in text
    lines = io.write_solution(m, rep, tmp_path / "u.csv", {"s": 0.5}).read_text().splitlines()
    assert lines[0] == "# s=0.5" and lines[3] == "vertex,x,u"
    assert len(lines) == 4 + op.n
    assert float(lines[4].split(",")[2]) == rep.solution[0]


def test_write_table_reprs(tmp_path):
    p = io.write_table(tmp_path / "t.csv", ["a", "b"], [[0.1, 3], [np.float64(1 / 3), 4]])
    assert p.read_text().splitlines() == ["a,b", "0.1,3", f"{1 / 3!r},4"]
    io.write_points(np.array([[0.0, 1.0], [2.0, 3.0]]), tmp_path / "g.csv", segments=[[0, 1]])
    assert (tmp_path / "g_segments.csv").read_text().splitlines() == ["a,b", "0,1"]
