"""Row-by-row assembly of the discrete operator on the hat-function space.

At an interior vertex ``z`` with radius ``b = b_eps(z)``

    L_h[u](z) = M(z) u(z) - sum_y A(z, y) u(y),
    M(z)      = int_{R^d} K_b(|y|) eta dy,
    A(z, y)   = int_Omega phi_y(x) K_b(|z - x|) eta((z - x)/|z - x|) dx.

``A`` includes the diagonal term ``A(z, z)``; boundary hats carry the value
zero and are dropped from the columns.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _numerics as nm
from .errors import DeskScaleError, InvalidParameterError
from .kernel import angular_integral, make_regularized_kernel
from .mesh import BepsPolicy, GradedMesh, beps_values

MAX_NODES = {1: 4096, 2: 2500}
ANGULAR_RULES = {8: (nm.GL8_X, nm.GL8_W), 16: (nm.GL16_X, nm.GL16_W)}


@dataclass(eq=False)
class DiscreteOperator:
    mesh: GradedMesh
    spec: object
    policy: BepsPolicy
    radii: np.ndarray      # b_eps at interior vertices
    M: np.ndarray          # diagonal mass
    A: np.ndarray          # (n, n) nonnegative weights over interior vertices
    report: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.M.size

    @cached_property
    def row_defect(self):
        return self.M - self.A.sum(axis=1)

    @cached_property
    def matrix(self):
        """Dense system matrix ``diag(M) - A``."""
        L = -self.A.copy()
        L[np.diag_indices_from(L)] += self.M
        return L

    def apply(self, u):
        return apply(self, u)


def apply(op, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (op.n,):
        raise InvalidParameterError(f"expected a vector of length {op.n}, got shape {u.shape}")
    return op.M * u - op.A @ u


def _angular_data(spec):
    if spec.d == 1:
        return float(spec(np.array([[1.0]]))[0]), None
    ca, cb = spec.fourier_coefficients()
    return None, (np.ascontiguousarray(ca), np.ascontiguousarray(cb))


def _diagonal_mass(spec, radii):
    s, d = spec.s, spec.d
    omega = angular_integral(spec)
    out = np.empty(radii.size)
    for k, b in enumerate(radii):
        K = make_regularized_kernel(d, s, b)
        out[k] = omega * (K.moment(d - 1, 0.0, b) + b ** (-2.0 * s) / (2.0 * s))
    return out


def _full_rows(mesh, spec, rows, radii, angular_order, threads):
    """Weights of every hat (boundary ones included) for the given row vertices."""
    out = np.zeros((rows.size, mesh.n_vertices))
    eta1, series = _angular_data(spec)
    if mesh.d == 2:
        qx, qw = ANGULAR_RULES[angular_order]
        V = np.ascontiguousarray(mesh.vertices)
        E = np.ascontiguousarray(mesh.elements.astype(np.int64))

    def work(lo, hi):
        r, b = rows[lo:hi].astype(np.int64), radii[lo:hi].astype(float)
        if mesh.d == 1:
            nm.rows_1d(mesh.vertices[:, 0].copy(), r, b, spec.s, eta1, out[lo:hi])
        else:
            nm.rows_2d(V, E, r, b, spec.s, series[0], series[1], qx, qw, out[lo:hi])

    threads = max(1, int(threads))
    if threads == 1 or rows.size < 2 * threads:
        work(0, rows.size)
    else:
        bounds = np.linspace(0, rows.size, 4 * threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(lambda k: work(bounds[k], bounds[k + 1]), range(bounds.size - 1)))
    return out


def _check_compat(mesh, spec):
    if mesh.d != spec.d:
        raise InvalidParameterError(f"mesh dimension {mesh.d} != kernel dimension {spec.d}")


def assemble_row(mesh, spec, policy, z, angular_order=8):
    """``(M(z), weights)`` for interior vertex id ``z``; weights over ``mesh.interior``."""
    _check_compat(mesh, spec)
    if mesh.delta[z] <= 0:
        raise InvalidParameterError(f"vertex {z} is a boundary vertex")
    k = int(np.searchsorted(mesh.interior, z))
    b = beps_values(policy, mesh)[k:k + 1]
    full = _full_rows(mesh, spec, np.array([z]), b, angular_order, 1)[0]
    return float(_diagonal_mass(spec, b)[0]), full[mesh.interior]


def assemble_operator(mesh, spec, policy, threads=1, max_nodes=None, angular_order=8):
    """Assemble all rows; invariants are checked and recorded in ``op.report``."""
    _check_compat(mesh, spec)
    cap = MAX_NODES[mesh.d] if max_nodes is None else int(max_nodes)
    n = mesh.n_interior
    if n > cap:
        raise DeskScaleError(
            f"{n} interior nodes exceed the dense {mesh.d}D cap of {cap} "
            f"(about {8 * n * n / 2**30:.1f} GiB per matrix)")
    if angular_order not in ANGULAR_RULES:
        raise InvalidParameterError(f"angular_order must be one of {sorted(ANGULAR_RULES)}")
    radii = beps_values(policy, mesh)
    full = _full_rows(mesh, spec, mesh.interior, radii, angular_order, threads)
    A = np.ascontiguousarray(full[:, mesh.interior])
    M = _diagonal_mass(spec, radii)
    op = DiscreteOperator(mesh, spec, policy, radii, M, A)
    op.report = operator_report(op)
    return op


def operator_report(op):
    defect = op.row_defect
    delta = op.mesh.delta[op.mesh.interior]
    scaled = defect * delta ** (2.0 * op.spec.s)
    return {
        "n": op.n,
        "min_weight": float(op.A.min()) if op.n else 0.0,
        "negative_weights": int(np.count_nonzero(op.A < 0)),
        "nonpositive_defects": int(np.count_nonzero(defect <= 0)),
        "min_scaled_defect": float(scaled.min()) if op.n else np.nan,
        "radius_in_bounds": bool(np.all(
            (op.radii >= 0.5 * op.mesh.h_z[op.mesh.interior] * (1 - 1e-12))
            & (op.radii <= 0.5 * delta * (1 + 1e-12)))),
    }
