"""Brute-force evaluators of the continuous operators and exact solutions.

All evaluations use the symmetric second-difference form

    L[w](x) = int_{S+} eta(theta) int_0^inf (2 w(x) - w(x - r theta) - w(x + r theta))
                                            k(r) r^(d-1) dr dtheta,

where ``S+`` is half of the unit sphere and ``k`` is either the singular
kernel ``r^(-d-2s)`` or a regularized one.  Radial integrals are split at a
near-field radius, at every kink of ``w`` along the ray and at the kernel
splice, and finished with a closed-form tail once the ray has left the
support of ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (CertificationError, ConvergenceError, DivergentIntegralError,
                     InvalidParameterError)
from .kernel import (KernelSpec, angular_matrix, fractional_laplacian,
                     make_regularized_kernel, powint)
from .quadrature import integrate
from .rates import fit_rate

INNER_RTOL = 1e-12
OUTER_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Field:
    """A function on R^d given by a vectorized ``func((n, d)) -> (n,)``.

    ``func`` must vanish outside the ball ``B(center, radius)``.  ``kinks``
    optionally returns the radii ``r > 0`` at which ``r -> func(x +- r theta)``
    is not smooth.
    """

    func: Callable[[np.ndarray], np.ndarray]
    d: int
    center: np.ndarray
    radius: float
    kinks: Callable | None = None
    domain_distance: Callable | None = None
    name: str = "field"
    hessian: np.ndarray | None = None   # set for globally quadratic fields

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.d)
        return np.asarray(self.func(pts), dtype=float)

    def scaled(self, c):
        H = None if self.hessian is None else c * self.hessian
        return Field(lambda p: c * self.func(p), self.d, self.center, self.radius,
                     self.kinks, self.domain_distance, f"{c:g}*{self.name}", H)

    def __add__(self, other):
        c = 0.5 * (self.center + other.center)
        R = max(np.linalg.norm(self.center - c) + self.radius,
                np.linalg.norm(other.center - c) + other.radius)

        def kinks(x, th):
            out = []
            for f in (self, other):
                if f.kinks is not None:
                    out.append(np.asarray(f.kinks(x, th), dtype=float))
            return np.concatenate(out) if out else np.zeros(0)

        H = None
        if self.hessian is not None and other.hessian is not None:
            H = self.hessian + other.hessian
        return Field(lambda p: self.func(p) + other.func(p), self.d, c, R, kinks,
                     self.domain_distance, f"{self.name}+{other.name}", H)


@dataclass(frozen=True, eq=False)
class ExactSolution:
    u: Field
    f: Callable[[np.ndarray], np.ndarray]
    lam: float
    description: str
    certificate: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# radial machinery


EPS = np.finfo(float).eps


def _second_difference(w, x, theta, w0):
    """``r -> (D(r), noise(r))`` with ``D = 2 w(x) - w(x - r theta) - w(x + r theta)``."""
    def D(r):
        r = np.asarray(r, dtype=float)
        step = r[:, None] * theta[None, :]
        a = w(x[None, :] - step)
        b = w(x[None, :] + step)
        return 2.0 * w0 - a - b, 4.0 * EPS * (2.0 * abs(w0) + np.abs(a) + np.abs(b))
    return D


def _weighted(D, weight):
    def g(r):
        val, noise = D(r)
        k = weight(r)
        return val * k, noise * np.abs(k)
    return g


def _sphere_kinks(x, theta, centre, radius):
    """Radii where the two rays ``x +- r theta`` cross the sphere ``|y - c| = R``."""
    y = x - centre
    b = float(y @ theta)
    c = float(y @ y) - radius**2
    disc = b * b - c
    if disc <= 0:
        return np.zeros(0)
    root = math.sqrt(disc)
    cand = np.array([-b - root, -b + root, b - root, b + root])
    return cand[cand > 0]


def _tail_radius(w, x):
    return float(np.linalg.norm(x - w.center) + w.radius)


def _kinks_along(w, x, theta):
    if w.kinks is None:
        return np.zeros(0)
    k = np.asarray(w.kinks(x, theta), dtype=float).ravel()
    return k[np.isfinite(k) & (k > 0)]


def _near_true(D, rho, s, r_floor):
    """``int_0^rho D(r) r^(-1-2s) dr`` through ``u = (r/rho)^(2-2s)``.

    ``D`` is even in ``r``, so ``D(r)/r^2 = a + b r^2 + O(r^4)``.  Below
    ``r_floor`` that model, fitted at ``r_floor`` and ``2 r_floor``,
    replaces the direct evaluation whose roundoff grows like ``r^-2``.
    """
    p = 2.0 - 2.0 * s
    r_floor = min(r_floor, 0.5 * rho)
    r12 = np.array([r_floor, 2.0 * r_floor])
    v, n = D(r12)
    q = v / r12**2
    slope = (q[1] - q[0]) / (3.0 * r_floor**2)
    a0 = q[0] - slope * r_floor**2
    n_floor = 3.0 * np.max(n / r12**2)

    def g(u):
        r = rho * u ** (1.0 / p)
        out = a0 + slope * r**2
        noise = np.full(r.shape, n_floor)
        big = r > r_floor
        if np.any(big):
            v, n = D(r[big])
            out[big] = v / r[big] ** 2
            noise[big] = n / r[big] ** 2
        return out, noise

    val, err = integrate(g, 0.0, 1.0, rtol=INNER_RTOL, mass_rtol=1e-15, noisy=True)
    return rho**p / p * val, rho**p / p * err


def _radial_integral(w, x, theta, w0, spec, K, rho, extra=()):
    """Return ``(near, far, err)`` radial integrals along direction ``theta``.

    ``K`` is ``None`` for the singular kernel, otherwise a regularized
    kernel.  ``near`` covers ``[0, rho]``; ``err`` sums the quadrature error
    estimates.
    """
    d, s = spec.d, spec.s
    D = _second_difference(w, x, theta, w0)
    R = _tail_radius(w, x)
    kinks = np.concatenate([_kinks_along(w, x, theta), np.asarray(extra, dtype=float)])
    if K is None:
        near, err = _near_true(D, rho, s, r_floor=min(2e-3, 0.25 * rho))
    else:
        bk = kinks[kinks < rho]
        if K.eps < rho:
            bk = np.append(bk, K.eps)
        near, err = integrate(_weighted(D, lambda r: K(r) * r ** (d - 1)), 0.0, rho, bk,
                            rtol=INNER_RTOL, mass_rtol=1e-15, noisy=True)
    far = 0.0
    if not math.isfinite(R):
        return near, _polynomial_far(w, theta), err
    hi = max(R, rho)
    if hi > rho:
        bk = kinks[(kinks > rho) & (kinks < hi)]
        if K is None or K.eps <= rho:
            fk = _weighted(D, lambda r: r ** (-1.0 - 2.0 * s))
        else:
            bk = np.append(bk, K.eps)
            fk = _weighted(D, lambda r: K(r) * r ** (d - 1))
        far, ferr = integrate(fk, rho, hi, bk, rtol=INNER_RTOL, mass_rtol=1e-15, noisy=True)
        err += ferr
    # beyond R both evaluation points lie outside the support: D = 2 w(x)
    if w0 != 0.0:
        if K is None or K.eps <= hi:
            far += 2.0 * w0 * powint(hi, math.inf, -2.0 * s)
        else:
            far += 2.0 * w0 * K.moment(d - 1, hi, math.inf)
    return near, far, err


def _polynomial_far(w, theta):
    # D(r) = -r^2 theta.H.theta for a quadratic: the far field is finite only when it vanishes
    H = w.hessian
    if H is None or abs(float(theta @ H @ theta)) > 0.0:
        raise DivergentIntegralError(
            f"far field of {w.name} diverges along direction {np.round(theta, 6)}")
    return 0.0


def _operator_parts(w, spec, x, K, rho_fn, which="sum"):
    """Half-sphere integral of the near part (``which="near"``) or of near + far."""
    x = np.asarray(x, dtype=float).reshape(spec.d)
    w0 = float(w(x[None, :])[0])
    pick = (lambda nf: nf[0]) if which == "near" else (lambda nf: nf[0] + nf[1])
    if spec.d == 1:
        theta = np.array([1.0])
        eta = float(spec(theta[None, :])[0])
        return eta * pick(_radial_integral(w, x, theta, w0, spec, K, rho_fn(theta)))

    def g(phis):
        out = np.empty(phis.size)
        noise = np.empty(phis.size)
        for i, phi in enumerate(phis):
            th = np.array([math.cos(phi), math.sin(phi)])
            parts = _radial_integral(w, x, th, w0, spec, K, rho_fn(th))
            out[i], noise[i] = pick(parts), parts[2]
        eta = spec.eta_angle(phis)
        return out * eta, noise * np.abs(eta)

    # the radial error estimates act as the noise floor of the angular integrand
    val, _ = integrate(g, 0.0, math.pi, rtol=OUTER_RTOL, mass_rtol=1e-15, noisy=True)
    return val


def _default_rho(w, x):
    def rho(theta):
        k = _kinks_along(w, x, theta)
        R = _tail_radius(w, x)
        first = k.min() if k.size else R
        return 0.5 * min(first, R, 1.0)
    return rho


def eval_regularized_op(w, spec, eps, x, rho=None):
    """Regularized operator with radial kernel ``K_eps`` at the point ``x``."""
    K = make_regularized_kernel(spec.d, spec.s, eps)
    x = np.asarray(x, dtype=float).reshape(spec.d)
    rho_fn = (lambda th: eps) if rho is None else (lambda th: rho)
    return _operator_parts(w, spec, x, K, rho_fn)


def eval_true_op(w, spec, x, rho=None):
    """Singular operator at an interior point ``x`` of a field smooth near ``x``."""
    x = np.asarray(x, dtype=float).reshape(spec.d)
    if w.domain_distance is not None and w.domain_distance(x) < 1e-6:
        raise InvalidParameterError("evaluation point lies within 1e-6 of the boundary")
    rho_fn = _default_rho(w, x) if rho is None else (lambda th: rho)
    return _operator_parts(w, spec, x, None, rho_fn)


def near_field_integral(w, spec, eps, x):
    """``int_{B_eps} (w(x+y) - 2w(x) + w(x-y)) |y|^(-d-2s) eta(y/|y|) dy``."""
    x = np.asarray(x, dtype=float).reshape(spec.d)
    return -2.0 * _operator_parts(_truncate(w, x, eps), spec, x, None, lambda th: eps, "near")


def _truncate(w, x, eps):
    # only the near part is used; shrink the support so no far work is done
    return Field(w.func, w.d, x, eps, None, None, w.name)


def near_field_difference(spec, w, x, eps):
    """``|L w(x) - L_eps w(x)|`` with both operators split at ``r = eps``.

    Outside ``B_eps`` the two kernels coincide, so only the near fields are
    computed.
    """
    x = np.asarray(x, dtype=float).reshape(spec.d)
    K = make_regularized_kernel(spec.d, spec.s, eps)
    local = _truncate(w, x, eps)
    true_near = _operator_parts(local, spec, x, None, lambda th: eps, "near")
    reg_near = _operator_parts(local, spec, x, K, lambda th: eps, "near")
    return abs(true_near - reg_near)


def regularization_rate_probe(spec, w, x, eps_list):
    """Fit the rate of ``|L w(x) - L_eps w(x)|`` as ``eps -> 0``.

    For each ``eps`` both operators are split at ``r = eps`` so their far
    fields are the same floating point numbers and only the near fields
    differ.  Returns ``(slope, r2, errors)``.
    """
    errs = np.array([near_field_difference(spec, w, x, eps) for eps in eps_list])
    slope, r2 = fit_rate(np.asarray(eps_list, dtype=float), errs)
    return slope, r2, errs


# ---------------------------------------------------------------------------
# fields


def polynomial_field(d, coeffs):
    """Quadratic ``c + g.x + x^T H x / 2`` (``coeffs = (c, g, H)``), unbounded support."""
    c, g, H = coeffs
    g = np.asarray(g, dtype=float).reshape(d)
    H = np.asarray(H, dtype=float).reshape(d, d)

    def func(p):
        return c + p @ g + 0.5 * np.einsum("ni,ij,nj->n", p, H, p)

    return Field(func, d, np.zeros(d), math.inf, name="quadratic", hessian=H.copy())


def bump_field(d, center=None, radius=1.0, height=1.0):
    """C-infinity bump ``height * exp(1 - 1/(1 - |x-c|^2/R^2))`` (value ``height`` at c)."""
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)

    def func(p):
        q = np.sum((p - c) ** 2, axis=1) / radius**2
        out = np.zeros(q.shape)
        inside = q < 1.0
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return out

    return Field(func, d, c, radius, lambda x, th: _sphere_kinks(x, th, c, radius),
                 name="bump")


def ball_profile(d, s, lam=1.0):
    """``lam (1 - |x|^2)_+^s`` on the unit ball."""

    def func(p):
        q = 1.0 - np.sum(p**2, axis=1)
        return lam * np.where(q > 0, np.abs(q) ** s, 0.0)

    origin = np.zeros(d)
    return Field(func, d, origin, 1.0, lambda x, th: _sphere_kinks(x, th, origin, 1.0),
                 lambda x: 1.0 - float(np.linalg.norm(x)), name="ball")


def mesh_field(mesh, u_interior):
    """Zero-extended piecewise-linear field on ``mesh``."""
    V = mesh.vertices
    u = mesh.extend(u_interior)
    centre = V.mean(axis=0)
    radius = float(np.max(np.linalg.norm(V - centre, axis=1)))
    if mesh.d == 1:
        xs = V[:, 0]

        def func(p):
            return np.interp(p[:, 0], xs, u, left=0.0, right=0.0)

        def kinks(x, th):
            return np.abs(xs - x[0])
    else:
        E = mesh.elements
        edges = np.unique(np.sort(np.vstack([E[:, [0, 1]], E[:, [1, 2]], E[:, [2, 0]]]), axis=1), axis=0)
        A, B = V[edges[:, 0]], V[edges[:, 1]]

        def func(p):
            return mesh.interpolate(u_interior, p)

        def kinks(x, th):
            # r with x + r th or x - r th on an edge
            e = B - A
            out = []
            for sgn in (1.0, -1.0):
                dvec = sgn * th
                den = dvec[0] * e[:, 1] - dvec[1] * e[:, 0]
                ok = np.abs(den) > 1e-14
                q = A[ok] - x
                r = (q[:, 0] * e[ok, 1] - q[:, 1] * e[ok, 0]) / den[ok]
                t = (q[:, 0] * dvec[1] - q[:, 1] * dvec[0]) / den[ok]
                out.append(r[(t >= -1e-12) & (t <= 1 + 1e-12) & (r > 0)])
            return np.concatenate(out)

    return Field(func, mesh.d, centre, radius, kinks, name="mesh-field")


# ---------------------------------------------------------------------------
# exact solutions


def classical_ball_constant(d, s):
    """Closed-form constant of the torsion function of the fractional Laplacian."""
    return 2.0 ** (-2.0 * s) * math.gamma(d / 2.0) / (math.gamma(d / 2.0 + s) * math.gamma(1.0 + s))


def _ball_points(d):
    if d == 1:
        return np.array([[0.0], [0.3], [-0.3], [0.6], [-0.6]])
    return np.array([[0.0, 0.0], [0.3, 0.0], [0.0, -0.3], [0.35, 0.35], [-0.5, 0.2]])


def exact_ball_solution(d, s, tol=1e-4):
    """Torsion function on the unit ball for ``eta = C(d, s)`` and ``f = 1``.

    The constant is computed by the singular-operator oracle at the origin
    and then certified at five interior points.
    """
    spec = fractional_laplacian(d, s)
    profile = ball_profile(d, s)
    lam = 1.0 / eval_true_op(profile, spec, np.zeros(d))
    u = ball_profile(d, s, lam)
    residual = {}
    for p in _ball_points(d):
        val = eval_true_op(u, spec, p)
        residual[tuple(p)] = val - 1.0
        if abs(val - 1.0) > tol:
            raise CertificationError(
                f"exact ball solution failed certification at x={p}: L u = {val!r}")
    return ExactSolution(u, lambda p: np.ones(np.asarray(p).reshape(-1, d).shape[0]), lam,
                         f"lam (1 - |x|^2)_+^{s} on the unit ball, d={d}", residual)


# ---------------------------------------------------------------------------
# dense complementarity oracle


def obstacle_active_set(L, f, psi, max_iter=None):
    """Solve ``min(L u - f, u - psi) = 0`` by policy iteration on the active set.

    Independent of the projected sweeps used by the solvers; exact up to the
    dense linear solves for an M-matrix ``L``.
    """
    L = np.asarray(L, dtype=float)
    n = f.size
    max_iter = n + 2 if max_iter is None else max_iter
    u = np.linalg.solve(L, f)
    active = None
    for _ in range(max_iter):
        # policy: pick the branch attaining the minimum at every node
        new_active = (u - psi) < (L @ u - f)
        if active is not None and np.array_equal(new_active, active):
            return u
        active = new_active
        u = psi.copy()
        free = ~active
        if np.any(free):
            rhs = f[free] - L[np.ix_(free, active)] @ psi[active]
            u[free] = np.linalg.solve(L[np.ix_(free, free)], rhs)
    raise ConvergenceError("active-set iteration did not settle")
