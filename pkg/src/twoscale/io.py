"""Plain-text exports: meshes, legacy VTK, operator dumps, solutions and tables."""

import csv
from pathlib import Path

import numpy as np


def write_mesh(mesh, stem):
    """Write ``stem.node`` (one vertex per line) and ``stem.ele`` (0-based indices)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(stem.with_suffix(".node"), mesh.vertices, fmt="%.17g")
    np.savetxt(stem.with_suffix(".ele"), mesh.elements, fmt="%d")
    return stem.with_suffix(".node"), stem.with_suffix(".ele")


def read_mesh_arrays(stem):
    stem = Path(stem)
    V = np.loadtxt(stem.with_suffix(".node"), ndmin=2)
    E = np.loadtxt(stem.with_suffix(".ele"), dtype=int, ndmin=2)
    return V, E


def write_vtk(mesh, path, point_data=None, title="twoscale"):
    """Legacy ASCII VTK unstructured grid with optional nodal scalar fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    V = mesh.vertices
    if V.shape[1] == 1:
        V = np.column_stack([V, np.zeros(V.shape[0])])
    E = mesh.elements
    cell_type = 3 if mesh.d == 1 else 5
    k = E.shape[1]
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {V.shape[0]} double"]
    lines += [f"{p[0]:.17g} {p[1]:.17g} 0" for p in V]
    lines.append(f"CELLS {E.shape[0]} {E.shape[0] * (k + 1)}")
    lines += [f"{k} " + " ".join(map(str, e)) for e in E]
    lines.append(f"CELL_TYPES {E.shape[0]}")
    lines += [str(cell_type)] * E.shape[0]
    if point_data:
        lines.append(f"POINT_DATA {V.shape[0]}")
        for name, vals in point_data.items():
            vals = np.asarray(vals, dtype=float)
            if vals.size == mesh.n_interior:
                vals = mesh.extend(vals)
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.17g}" for v in vals]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_operator(op, path):
    """Row-major CSV of ``diag(M) - A`` with a commented header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = (f"N={op.n} s={op.spec.s} mu={op.mesh.mu} h={op.mesh.h} "
              f"policy={op.policy}")
    np.savetxt(path, op.matrix, delimiter=",", fmt="%.17g", header=header)
    return path


def read_operator(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_solution(mesh, report, path, meta=None):
    """Nodal values with coordinates; ``meta`` entries become ``# key=value`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    X = mesh.interior_points()
    with path.open("w", newline="") as fh:
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={val}\n")
        fh.write(f"# iterations={report.iterations}\n# final_residual={report.final_residual!r}\n")
        w = csv.writer(fh)
        cols = ["x", "y"][: mesh.d]
        w.writerow(["vertex", *cols, "u"])
        for vid, p, u in zip(mesh.interior, X, report.solution):
            w.writerow([int(vid), *[repr(float(c)) for c in p], repr(float(u))])
    return path


def write_points(points, path, segments=None):
    """Free-boundary point list, plus an indexed segment file for polylines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    P = np.asarray(points, dtype=float)
    cols = ["x", "y"][: P.shape[1]] if P.ndim == 2 else ["x"]
    write_table(path, cols, [list(map(float, p)) for p in P.reshape(len(P), -1)])
    if segments is not None and len(segments):
        write_table(path.with_name(path.stem + "_segments.csv"), ["a", "b"],
                    [list(map(int, s)) for s in segments])
    return path


def write_table(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
    return path
