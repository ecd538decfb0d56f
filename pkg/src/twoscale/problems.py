"""Built-in test problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParameterError
from .kernel import cosine_series, frac_laplacian_constant, fractional_laplacian

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@dataclass(frozen=True)
class ObstacleProblem:
    psi: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    domain: tuple
    name: str


def bump_obstacle_1d(c0=0.5, c1=2.0, f0=0.0):
    """Concave parabola ``psi = c0 - c1 x^2`` on ``(-1, 1)`` with constant ``f = f0``."""
    if c0 - c1 >= 0:
        raise InvalidParameterError("obstacle must be negative at x = +-1 (needs c0 < c1)")

    def psi(X):
        return c0 - c1 * np.asarray(X)[:, 0] ** 2

    def f(X):
        return np.full(np.asarray(X).shape[0], float(f0))

    return ObstacleProblem(psi, f, (-1.0, 1.0), f"bump-obstacle-1d(c0={c0!r},c1={c1!r},f0={f0!r})")


def expression_obstacle(psi_text, f_text, domain):
    """Obstacle problem with ``psi`` and ``f`` given as expression strings."""
    from .expr import Expression
    psi, f = Expression(psi_text), Expression(f_text)
    dom = tuple(map(float, domain)) if np.ndim(domain) == 1 else tuple(map(tuple, np.asarray(domain, float)))
    return ObstacleProblem(psi, f, dom, f"expr(psi={psi_text},f={f_text},domain={dom})")


def build_mesh(domain, h, mu):
    """Interval ``(a, b)`` or convex polygon vertex list."""
    from .mesh import build_graded_interval_mesh, build_graded_polygon_mesh
    if np.ndim(domain) == 1:
        a, b = map(float, domain)
        return build_graded_interval_mesh(a, b, h, mu)
    return build_graded_polygon_mesh(np.asarray(domain, dtype=float), h, mu)


def check_interior_contact(mesh, u, psi_h, tol):
    """The contact nodes form one nonempty run that stays away from the boundary."""
    contact = np.nonzero(u - psi_h <= tol)[0]
    if contact.size == 0:
        return False
    if mesh.d == 1:
        contiguous = np.all(np.diff(contact) == 1)
        return bool(contiguous and contact[0] > 0 and contact[-1] < mesh.n_interior - 1)
    return bool(np.all(mesh.delta[mesh.interior[contact]] > 0))


def hjb_iso_aniso_2d(s, amplitude=0.5):
    """``eta_1 = C(2, s)`` and ``eta_2 = C(2, s) (1 + a cos 2 phi)``.

    Both lie in the class with ``lambda = (1 - a) C``, ``Lambda = (1 + a) C``
    and neither dominates the other, so both operators are active.
    """
    C = frac_laplacian_constant(2, s)
    lam, Lam = (1.0 - amplitude) * C, (1.0 + amplitude) * C
    iso = fractional_laplacian(2, s)
    aniso = cosine_series(s, [C, amplitude * C], lam=lam, Lam=Lam, name="cosine-aniso")
    return iso, aniso, UNIT_SQUARE.copy()


def constant_rhs(value=1.0):
    def f(X):
        return np.full(np.atleast_2d(X).shape[0], float(value))
    return f
