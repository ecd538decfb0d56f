"""Discrete contact sets, free boundaries and Hausdorff distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidParameterError

NONCONTACT, CONTACT, CUT = 0, 1, 2


def level_height(h, mu, s, C_delta, C_psi):
    """``C_delta * max(h^(mu s), h^(1-s)) + C_psi * h^2``."""
    if min(h, mu, s) <= 0 or C_delta < 0 or C_psi < 0:
        raise InvalidParameterError("level height needs positive h, mu, s and nonnegative constants")
    return C_delta * max(h ** (mu * s), h ** (1.0 - s)) + C_psi * h**2


def projection_error_scale(h, mu, s):
    return max(h ** (mu * s), h ** (1.0 - s))


@dataclass(eq=False)
class FreeBoundary:
    level_height: float
    contact_region: np.ndarray     # per-element NONCONTACT / CONTACT / CUT
    boundary_points: np.ndarray    # (m, d)
    segments: np.ndarray | None    # (k, 2) indices into boundary_points (2D)
    gap: np.ndarray                # u_h - psi_h - level at every vertex

    @property
    def empty(self):
        return self.boundary_points.shape[0] == 0

    def contact_nodes(self):
        return np.nonzero(self.gap <= 0.0)[0]


def _gap(mesh, u_h, psi_h, delta_h, psi_boundary):
    g = np.full(mesh.n_vertices, np.inf)
    g[mesh.interior] = np.asarray(u_h) - np.asarray(psi_h) - delta_h
    if psi_boundary is not None:
        g[mesh.boundary] = -np.asarray(psi_boundary) - delta_h
    return g


def extract_free_boundary(mesh, u_h, psi_h, delta_h, psi_boundary=None):
    """Level set ``{u_h - psi_h = delta_h}`` of the piecewise-linear gap.

    ``u_h`` and ``psi_h`` are interior nodal vectors.  Boundary vertices are
    non-contact unless ``psi_boundary`` supplies obstacle values there.
    """
    g = _gap(mesh, u_h, psi_h, delta_h, psi_boundary)
    E = mesh.elements
    ge = g[E]
    labels = np.full(E.shape[0], CUT, dtype=np.int8)
    labels[np.all(ge <= 0, axis=1)] = CONTACT
    labels[np.all(ge > 0, axis=1)] = NONCONTACT
    V = mesh.vertices
    if mesh.d == 1:
        pts = []
        for a, b in E[labels == CUT]:
            ga, gb = g[a], g[b]
            if np.isinf(ga):
                pts.append(V[a, 0])
            elif np.isinf(gb):
                pts.append(V[b, 0])
            else:
                pts.append(V[a, 0] + ga / (ga - gb) * (V[b, 0] - V[a, 0]))
        pts = np.unique(np.round(np.array(pts, dtype=float), 15)).reshape(-1, 1)
        return FreeBoundary(delta_h, labels, pts, None, g)

    edge_of = {}
    points = []
    segments = []
    for t in np.nonzero(labels == CUT)[0]:
        ends = []
        tri = E[t]
        for j in range(3):
            a, b = sorted((int(tri[j]), int(tri[(j + 1) % 3])))
            ga, gb = g[a], g[b]
            if (ga <= 0) == (gb <= 0):
                continue
            key = (a, b)
            if key not in edge_of:
                if np.isinf(ga) or np.isinf(gb):
                    p = V[a] if np.isinf(ga) else V[b]
                else:
                    p = V[a] + ga / (ga - gb) * (V[b] - V[a])
                edge_of[key] = len(points)
                points.append(p)
            ends.append(edge_of[key])
        if len(ends) == 2 and ends[0] != ends[1]:
            segments.append(ends)
    pts = np.array(points, dtype=float).reshape(-1, 2)
    seg = np.array(segments, dtype=int).reshape(-1, 2)
    return FreeBoundary(delta_h, labels, pts, seg, g)


def resample(fb, spacing):
    """Sample points of a free boundary; 2D segments are resampled at ``spacing``."""
    if fb.segments is None or fb.segments.size == 0:
        return fb.boundary_points
    P = fb.boundary_points
    out = [P]
    for a, b in fb.segments:
        L = np.linalg.norm(P[b] - P[a])
        m = int(np.ceil(L / spacing))
        if m > 1:
            t = np.arange(1, m)[:, None] / m
            out.append(P[a] + t * (P[b] - P[a]))
    return np.vstack(out)


def hausdorff_distance(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise InvalidParameterError("Hausdorff distance of an empty set")
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    return float(max(dab, dba))


def ndp_probe(mesh_fine, u_ref, psi, strip_width, s, exponent=None, threshold=1e-10):
    """Smallest ratio ``(u - psi)(x) / d(x)^(1+s)`` over fine non-contact nodes
    within ``strip_width`` of the reference free boundary.

    ``exponent`` overrides ``1 + s`` (2 for the singular-point variant).
    Returns ``(a_est, n_samples)``.
    """
    fb = extract_free_boundary(mesh_fine, u_ref, psi, threshold)
    if fb.empty or not np.any(fb.gap <= 0):
        raise InvalidParameterError("reference solution has an empty contact set")
    gamma = resample(fb, mesh_fine.h**2)
    X = mesh_fine.interior_points()
    gap = np.asarray(u_ref) - np.asarray(psi)
    dist = cKDTree(gamma).query(X)[0]
    mask = (gap > threshold) & (dist > 0) & (dist <= strip_width)
    if not np.any(mask):
        raise InvalidParameterError("no samples in the strip around the free boundary")
    p = 1.0 + s if exponent is None else exponent
    return float(np.min(gap[mask] / dist[mask] ** p)), int(mask.sum())


def estimate_c_psi(psi, lo, hi, n=4001):
    """Sampled ``max |D^2 psi|`` from centred second differences on a box grid."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.size
    if d == 1:
        x = np.linspace(lo[0], hi[0], n)
        step = x[1] - x[0]
        v = psi(x[:, None])
        return float(np.max(np.abs(v[2:] - 2 * v[1:-1] + v[:-2])) / step**2)
    m = int(np.sqrt(n)) + 1
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], m), np.linspace(lo[1], hi[1], m))
    P = np.column_stack([gx.ravel(), gy.ravel()])
    step = min((hi - lo) / (m - 1)) * 0.5
    best = 0.0
    for e in ([1, 0], [0, 1], [np.sqrt(0.5), np.sqrt(0.5)], [np.sqrt(0.5), -np.sqrt(0.5)]):
        e = step * np.asarray(e)
        sd = (psi(P + e) - 2 * psi(P) + psi(P - e)) / step**2
        best = max(best, float(np.max(np.abs(sd))))
    return best
