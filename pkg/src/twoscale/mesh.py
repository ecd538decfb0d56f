"""Boundary-graded simplicial meshes and the regularization-radius policies.

Element sizes follow the grading law

    h_T ~ h^mu                         if T touches the boundary,
    h_T ~ h * dist(T, boundary)^((mu-1)/mu)   otherwise,

so that the nodal patch radius behaves like ``h * delta(z)^(1 - 1/mu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import GradingAuditError, InvalidParameterError

GRADING_LIMIT = 10.0


@dataclass(frozen=True, eq=False)
class GradedMesh:
    d: int
    vertices: np.ndarray          # (N, d)
    elements: np.ndarray          # (M, d+1) vertex indices
    interior: np.ndarray          # ids of vertices with delta > 0
    boundary: np.ndarray
    h: float
    mu: float
    delta: np.ndarray             # distance of every vertex to the boundary
    h_z: np.ndarray               # inscribed patch radius (0 on the boundary)
    domain: np.ndarray            # interval endpoints or polygon loop (CCW)
    audit: dict | None = field(default=None, repr=False)

    @property
    def n_interior(self):
        return self.interior.size

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def interior_points(self):
        return self.vertices[self.interior]

    def extend(self, u_interior):
        """Zero-extend a vector over interior vertices to all vertices."""
        u = np.zeros(self.n_vertices)
        u[self.interior] = u_interior
        return u

    def element_sizes(self):
        return _element_diameters(self.vertices, self.elements)

    def interpolate(self, u_interior, points):
        """Evaluate the piecewise-linear (zero-extended) field at ``points``.

        Points outside the domain evaluate to 0.
        """
        u = self.extend(u_interior)
        points = np.asarray(points, dtype=float)
        if self.d == 1:
            x = self.vertices[:, 0]
            return np.interp(np.ravel(points), x, u, left=0.0, right=0.0)
        return _interpolate_2d(self, u, points.reshape(-1, 2))


def _element_diameters(V, E):
    if V.shape[1] == 1:
        return np.abs(V[E[:, 1], 0] - V[E[:, 0], 0])
    P = V[E]
    edges = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 1], P[:, 0] - P[:, 2]], axis=1)
    return np.max(np.linalg.norm(edges, axis=2), axis=1)


def _check_grading_args(h, mu, mu_max=None):
    if not (0.0 < h < 1.0):
        raise InvalidParameterError(f"mesh parameter h must lie in (0, 1), got {h}")
    if mu < 1.0 or (mu_max is not None and mu > mu_max):
        hi = "" if mu_max is None else f", {mu_max}]"
        raise InvalidParameterError(f"grading exponent mu must lie in [1{hi or ', inf)'}, got {mu}")


def _ladder(h, mu):
    """Grading ladder ``(k h)^mu`` on [0, 1], including the endpoint 1."""
    n = int(math.ceil(1.0 / h - 1e-9))
    xi = np.minimum(np.arange(n + 1) * h, 1.0)
    return xi**mu


# ---------------------------------------------------------------------------
# 1D


def build_graded_interval_mesh(a, b, h, mu, audit=True):
    if not (b - a > 10.0 * np.finfo(float).eps * max(1.0, abs(a), abs(b))):
        raise InvalidParameterError(f"degenerate interval [{a}, {b}]")
    _check_grading_args(h, mu)
    L = 0.5 * (b - a)
    t = L * _ladder(h, mu)
    left = a + t
    right = b - t[::-1][1:]
    x = np.concatenate([left, right])
    x[len(t) - 1] = 0.5 * (a + b)
    V = x[:, None]
    E = np.column_stack([np.arange(x.size - 1), np.arange(1, x.size)])
    delta = np.minimum(x - a, b - x)
    delta[0] = delta[-1] = 0.0
    lengths = np.diff(x)
    hz = np.zeros_like(x)
    hz[1:-1] = np.minimum(lengths[:-1], lengths[1:])
    interior = np.arange(1, x.size - 1)
    boundary = np.array([0, x.size - 1])
    mesh = GradedMesh(1, V, E, interior, boundary, float(h), float(mu), delta, hz,
                      np.array([float(a), float(b)]))
    if audit:
        object.__setattr__(mesh, "audit", audit_grading(mesh))
    return mesh


# ---------------------------------------------------------------------------
# 2D convex polygons


def _orient_polygon(polygon):
    P = np.asarray(polygon, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or P.shape[0] < 3:
        raise InvalidParameterError("polygon must be an (n, 2) vertex loop with n >= 3")
    if np.allclose(P[0], P[-1]):
        P = P[:-1]
    e = np.roll(P, -1, axis=0) - P
    area2 = np.sum(P[:, 0] * np.roll(P[:, 1], -1) - np.roll(P[:, 0], -1) * P[:, 1])
    if area2 < 0:
        P = P[::-1].copy()
        e = np.roll(P, -1, axis=0) - P
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = np.max(np.linalg.norm(e, axis=1)) ** 2
    if np.any(cross < -1e-12 * scale) or abs(area2) < 1e-14 * scale:
        raise InvalidParameterError("polygon is not convex (or is degenerate)")
    return P


def _halfplanes(P):
    """Inward unit normals ``n`` and offsets ``c`` with ``n.x >= c`` inside."""
    e = np.roll(P, -1, axis=0) - P
    n = np.column_stack([-e[:, 1], e[:, 0]])
    n /= np.linalg.norm(n, axis=1)[:, None]
    return n, np.einsum("ij,ij->i", n, P)


def polygon_distance(P, points):
    """Exact distance from points to the boundary of the convex polygon ``P``."""
    points = np.atleast_2d(points)
    A, B = P, np.roll(P, -1, axis=0)
    best = np.full(points.shape[0], np.inf)
    for a, b in zip(A, B):
        ab = b - a
        t = np.clip((points - a) @ ab / (ab @ ab), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(points - (a + t[:, None] * ab), axis=1))
    return best


def _clip(poly, n, c):
    """Sutherland-Hodgman clip of a convex loop against ``n.x >= c``."""
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        fp, fq = n @ p - c, n @ q - c
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            out.append(p + fp / (fp - fq) * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def offset_polygon(P, dist):
    """Inner parallel polygon at distance ``dist`` (may be empty)."""
    n, c = _halfplanes(P)
    poly = P.copy()
    for ni, ci in zip(n, c):
        poly = _clip(poly, ni, ci + dist)
        if len(poly) == 0:
            break
    if len(poly):
        keep = np.linalg.norm(poly - np.roll(poly, 1, axis=0), axis=1) > 1e-14
        poly = poly[keep]
    return poly


def inradius(P):
    """Radius of the largest inscribed disc of a convex polygon (bisection on offsets)."""
    lo, hi = 0.0, 0.5 * np.max(np.ptp(P, axis=0))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        poly = offset_polygon(P, mid)
        if len(poly) >= 3 and _area(poly) > 1e-300:
            lo = mid
        else:
            hi = mid
    return lo


def _area(P):
    return 0.5 * abs(np.sum(P[:, 0] * np.roll(P[:, 1], -1) - np.roll(P[:, 0], -1) * P[:, 1]))


def _ring_points(poly, spacing):
    pts = []
    for p, q in zip(poly, np.roll(poly, -1, axis=0)):
        m = max(1, int(math.ceil(np.linalg.norm(q - p) / spacing - 1e-9)))
        t = np.arange(m)[:, None] / m
        pts.append(p + t * (q - p))
    return np.vstack(pts)


def _hex_lattice(poly, spacing):
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    dy = spacing * math.sqrt(3.0) / 2.0
    rows = []
    for j, y in enumerate(np.arange(lo[1], hi[1] + dy, dy)):
        shift = 0.5 * spacing * (j % 2)
        xs = np.arange(lo[0] - spacing + shift, hi[0] + spacing, spacing)
        rows.append(np.column_stack([xs, np.full(xs.size, y)]))
    return np.vstack(rows)


def _inside(poly, pts, margin):
    n, c = _halfplanes(poly)
    return np.all(pts @ n.T - c >= margin, axis=1)


def build_graded_polygon_mesh(polygon, h, mu, audit=True, strict=True):
    """Layered graded triangulation of a convex polygon.

    Rings are the inner parallel polygons at distances ``d_k = (k h)^mu``;
    points on ring ``k`` are spaced by the local annulus width
    ``d_{k+1} - d_k``, corners included.  Once the remaining inradius drops
    below the spacing, the core is filled with a hexagonal lattice.  The
    point cloud is triangulated by Delaunay.
    """
    _check_grading_args(h, mu, mu_max=2.0)
    P = _orient_polygon(polygon)
    R = inradius(P)
    k_max = int(math.ceil(1.0 / h)) + 1
    d = (np.arange(k_max + 2) * h) ** mu
    clouds = []
    last_d, last_w = 0.0, h**mu
    for k in range(k_max + 1):
        w = d[k + 1] - d[k]
        if k > 0 and R - d[k] < w:
            break
        ring = P if k == 0 else offset_polygon(P, d[k])
        if len(ring) < 3:
            break
        clouds.append(_ring_points(ring, w))
        last_d, last_w = d[k], w
    core = offset_polygon(P, last_d)
    if len(core) >= 3:
        lattice = _hex_lattice(core, last_w)
        lattice = lattice[_inside(core, lattice, 0.5 * last_w)]
        if lattice.size == 0:
            centre = _incenter(P, R)
            if _inside(core, centre[None], 0.3 * last_w)[0]:
                lattice = centre[None]
        clouds.append(lattice.reshape(-1, 2))
    V = np.vstack(clouds)
    tri = Delaunay(V)
    E = tri.simplices.copy()
    P3 = V[E]
    area2 = ((P3[:, 1, 0] - P3[:, 0, 0]) * (P3[:, 2, 1] - P3[:, 0, 1])
             - (P3[:, 1, 1] - P3[:, 0, 1]) * (P3[:, 2, 0] - P3[:, 0, 0]))
    scale = _element_diameters(V, E) ** 2
    E = E[np.abs(area2) > 1e-10 * scale]
    flip = area2[np.abs(area2) > 1e-10 * scale] < 0
    E[flip] = E[flip][:, [0, 2, 1]]
    used = np.zeros(V.shape[0], dtype=bool)
    used[E.ravel()] = True
    if not np.all(used):
        raise GradingAuditError("triangulation dropped vertices")
    covered = 0.5 * np.sum(np.abs(area2[np.abs(area2) > 1e-10 * scale]))
    if abs(covered - _area(P)) > 1e-9 * _area(P):
        raise GradingAuditError(f"triangulation covers area {covered}, polygon area {_area(P)}")

    delta = polygon_distance(P, V)
    tol = 1e-12 * np.max(np.ptp(P, axis=0))
    delta[delta < tol] = 0.0
    interior = np.nonzero(delta > 0)[0]
    boundary = np.nonzero(delta == 0)[0]
    hz = _patch_radii_2d(V, E)
    hz[boundary] = 0.0
    mesh = GradedMesh(2, V, E, interior, boundary, float(h), float(mu), delta, hz, P)
    if audit:
        report = audit_grading(mesh)
        object.__setattr__(mesh, "audit", report)
        if strict and report["C_g"] > GRADING_LIMIT:
            raise GradingAuditError(
                f"grading constant C_g = {report['C_g']:.3g} exceeds {GRADING_LIMIT}", report)
    return mesh


def _incenter(P, R):
    poly = offset_polygon(P, 0.999999 * R)
    return poly.mean(axis=0) if len(poly) else P.mean(axis=0)


def _patch_radii_2d(V, E):
    """Distance from each vertex to the far edges of its incident triangles."""
    hz = np.full(V.shape[0], np.inf)
    for j in range(3):
        z = E[:, j]
        a, b = V[E[:, (j + 1) % 3]], V[E[:, (j + 2) % 3]]
        p = V[z]
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        dist = np.linalg.norm(p - (a + t[:, None] * ab), axis=1)
        np.minimum.at(hz, z, dist)
    return hz


def _interpolate_2d(mesh, u, points, k=16):
    V, E = mesh.vertices, mesh.elements
    P = V[E]
    centroids = P.mean(axis=1)
    tree = cKDTree(centroids)
    k = min(k, E.shape[0])
    _, cand = tree.query(points, k=k)
    cand = cand.reshape(points.shape[0], k)
    a, b, c = P[cand, 0], P[cand, 1], P[cand, 2]
    det = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    q = points[:, None, :] - a
    l1 = (q[..., 0] * (c[..., 1] - a[..., 1]) - q[..., 1] * (c[..., 0] - a[..., 0])) / det
    l2 = ((b[..., 0] - a[..., 0]) * q[..., 1] - (b[..., 1] - a[..., 1]) * q[..., 0]) / det
    l0 = 1.0 - l1 - l2
    score = np.minimum(np.minimum(l0, l1), l2)
    best = np.argmax(score, axis=1)
    rows = np.arange(points.shape[0])
    el = cand[rows, best]
    lam = np.column_stack([l0[rows, best], l1[rows, best], l2[rows, best]])
    vals = np.einsum("ij,ij->i", lam, u[E[el]])
    outside = score[rows, best] < -1e-9
    vals[outside] = 0.0
    return vals


# ---------------------------------------------------------------------------
# audit


def _shape_quality(V, E):
    P = V[E]
    a = np.linalg.norm(P[:, 1] - P[:, 2], axis=1)
    b = np.linalg.norm(P[:, 2] - P[:, 0], axis=1)
    c = np.linalg.norm(P[:, 0] - P[:, 1], axis=1)
    s = 0.5 * (a + b + c)
    area = np.sqrt(np.maximum(s * (s - a) * (s - b) * (s - c), 0.0))
    r_in = area / s
    r_out = a * b * c / (4.0 * area)
    cosA = np.clip((b**2 + c**2 - a**2) / (2 * b * c), -1, 1)
    cosB = np.clip((a**2 + c**2 - b**2) / (2 * a * c), -1, 1)
    angles = np.degrees(np.arccos(np.column_stack([cosA, cosB])))
    angles = np.column_stack([angles, 180.0 - angles.sum(axis=1)])
    return r_out / (2.0 * r_in), angles.min()


def audit_grading(mesh, limit=GRADING_LIMIT):
    """Exhaustive element and patch ratio scan against the grading law.

    ``C_g`` is the smallest constant with every ratio in ``[1/C_g, C_g]``.
    """
    h, mu = mesh.h, mesh.mu
    hT = mesh.element_sizes()
    dist = np.min(mesh.delta[mesh.elements], axis=1)
    touching = dist == 0.0
    expo = (mu - 1.0) / mu
    elem_ratio = np.where(touching, hT / h**mu,
                          hT / (h * np.where(touching, 1.0, dist) ** expo))
    iz = mesh.interior
    patch_ratio = mesh.h_z[iz] / (h * mesh.delta[iz] ** (1.0 - 1.0 / mu))
    spread = np.concatenate([elem_ratio, patch_ratio])
    C_g = float(np.max(np.maximum(spread, 1.0 / spread)))
    violations = []
    for i in np.nonzero(np.maximum(elem_ratio, 1.0 / elem_ratio) > limit)[0]:
        violations.append(("element", int(i), float(elem_ratio[i])))
    for j in np.nonzero(np.maximum(patch_ratio, 1.0 / patch_ratio) > limit)[0]:
        violations.append(("vertex", int(iz[j]), float(patch_ratio[j])))
    report = {
        "C_g": C_g,
        "element_ratio_min": float(elem_ratio.min()),
        "element_ratio_max": float(elem_ratio.max()),
        "patch_ratio_min": float(patch_ratio.min()) if patch_ratio.size else math.nan,
        "patch_ratio_max": float(patch_ratio.max()) if patch_ratio.size else math.nan,
        "hz_le_delta": bool(np.all(mesh.h_z[iz] <= mesh.delta[iz] * (1 + 1e-12))),
        "violations": violations,
    }
    if mesh.d == 2:
        rr, min_angle = _shape_quality(mesh.vertices, mesh.elements)
        report["radius_ratio"] = float(rr.max())
        report["min_angle_deg"] = float(min_angle)
    return report


# ---------------------------------------------------------------------------
# regularization radius


@dataclass(frozen=True)
class BepsPolicy:
    variant: str
    alpha: float | None = None

    def __post_init__(self):
        if self.variant not in ("linear", "obstacle", "general"):
            raise InvalidParameterError(f"unknown b_eps policy {self.variant!r}")
        if self.variant == "general":
            if self.alpha is None or not (0.0 <= self.alpha <= 1.0):
                raise InvalidParameterError(f"general policy needs alpha in [0, 1], got {self.alpha}")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def obstacle(cls):
        return cls("obstacle")

    @classmethod
    def general(cls, alpha):
        return cls("general", float(alpha))

    @property
    def exponent(self):
        return {"linear": 0.5, "obstacle": 1.0}.get(self.variant, self.alpha)

    def __str__(self):
        return f"general({self.alpha:g})" if self.variant == "general" else self.variant

    @classmethod
    def parse(cls, text):
        text = text.strip().lower()
        if text.startswith("general"):
            inner = text[len("general"):].strip("() ")
            return cls.general(float(inner))
        return cls(text)


def beps_radius(policy, h_z, delta):
    a = policy.exponent
    return 0.5 * np.asarray(h_z) ** a * np.asarray(delta) ** (1.0 - a)


def beps(policy, mesh, z):
    if mesh.delta[z] <= 0.0:
        raise InvalidParameterError(f"vertex {z} lies on the boundary")
    return float(beps_radius(policy, mesh.h_z[z], mesh.delta[z]))


def beps_values(policy, mesh):
    """Radii at all interior vertices, in ``mesh.interior`` order."""
    iz = mesh.interior
    return beps_radius(policy, mesh.h_z[iz], mesh.delta[iz])
