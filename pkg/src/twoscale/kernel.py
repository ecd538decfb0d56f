"""Angular coefficients, the regularized radial kernel and their moments.

The operator of order ``2s`` is

    L[w](x) = p.v. int (w(x) - w(y)) |x - y|^(-d-2s) eta((x - y)/|x - y|) dy,

with ``eta`` symmetric and bounded between ``lam`` and ``Lam``.  Near the
origin the radial factor is replaced by ``K_eps``: a positive, C^1 cubic
spliced onto ``r^(-d-2s)`` at ``r = eps`` whose second radial moment over
``[0, eps]`` matches the singular one, so the two operators agree on
quadratics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergentIntegralError, InvalidParameterError

N_ANGULAR = 256
N_VALIDATION = 720


def _check_order(s):
    if not (0.0 < s < 1.0):
        raise InvalidParameterError(f"order s must lie in (0, 1), got s={s!r}")


def _check_dim(d):
    if d not in (1, 2):
        raise InvalidParameterError(f"dimension d must be 1 or 2, got d={d!r}")


def unit_directions(d, n=N_VALIDATION):
    """Sample directions on the unit sphere: ``{+1, -1}`` or ``n`` angles."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    phi = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(phi), np.sin(phi)])


@dataclass(frozen=True)
class KernelSpec:
    """Angular part of the operator.

    ``eta`` maps an array of unit directions with shape ``(n, d)`` to ``n``
    positive values.  Construction validates symmetry and the declared
    ellipticity bounds on a fixed direction grid.
    """

    d: int
    s: float
    eta: Callable[[np.ndarray], np.ndarray]
    lam: float
    Lam: float
    name: str = "custom"
    # cos/sin coefficients of eta(phi) in the harmonics 2k*phi (d=2 only)
    fourier: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _check_dim(self.d)
        _check_order(self.s)
        if not (0.0 < self.lam <= self.Lam):
            raise InvalidParameterError(
                f"ellipticity bounds need 0 < lambda <= Lambda, got {self.lam}, {self.Lam}")
        theta = unit_directions(self.d)
        vals = np.asarray(self.eta(theta), dtype=float)
        mirror = np.asarray(self.eta(-theta), dtype=float)
        scale = max(np.max(np.abs(vals)), 1e-300)
        if np.max(np.abs(vals - mirror)) > 1e-12 * scale:
            raise InvalidParameterError("eta is not symmetric: eta(theta) != eta(-theta)")
        slack = 1e-12 * self.Lam
        if np.min(vals) < self.lam - slack or np.max(vals) > self.Lam + slack:
            raise InvalidParameterError(
                f"eta leaves [{self.lam}, {self.Lam}]: sampled range "
                f"[{np.min(vals)}, {np.max(vals)}]")

    def __call__(self, theta):
        return np.asarray(self.eta(np.atleast_2d(theta)), dtype=float)

    def eta_angle(self, phi):
        """Evaluate ``eta`` at polar angles (d=2)."""
        phi = np.asarray(phi, dtype=float)
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1).reshape(-1, 2)
        return self.eta(dirs).reshape(phi.shape)

    def fourier_coefficients(self, tol=1e-15):
        """Coefficients ``(a, b)`` with ``eta(phi) = sum a_k cos(2k phi) + b_k sin(2k phi)``.

        Uses the exact series when one was supplied, otherwise an FFT of
        ``N_ANGULAR`` samples (spectrally accurate for smooth eta).
        """
        if self.d != 2:
            raise InvalidParameterError("Fourier representation is only defined for d=2")
        if self.fourier is not None:
            a, b = self.fourier
            return np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        n = N_ANGULAR
        phi = 2.0 * np.pi * np.arange(n) / n
        F = np.fft.rfft(self.eta_angle(phi)) / n
        even = F[0::2]
        a = 2.0 * even.real
        a[0] = even[0].real
        b = -2.0 * even.imag
        b[0] = 0.0
        # the Nyquist harmonic is aliased; drop it
        a, b = a[:-1], b[:-1]
        big = np.maximum(np.abs(a), np.abs(b)) > tol * np.max(np.abs(a))
        keep = np.nonzero(big)[0]
        k = keep[-1] + 1 if keep.size else 1
        return a[:k].copy(), b[:k].copy()


def frac_laplacian_constant(d, s):
    """Normalisation ``C(d, s)`` making ``eta = C(d, s)`` the fractional Laplacian."""
    _check_order(s)
    return 4.0**s * s * math.gamma(s + d / 2.0) / (math.pi ** (d / 2.0) * math.gamma(1.0 - s))


def fractional_laplacian(d, s):
    c = frac_laplacian_constant(d, s)
    return constant_kernel(d, s, c, name="fractional-laplacian")


def constant_kernel(d, s, c, name="constant"):
    if c <= 0:
        raise InvalidParameterError(f"constant eta must be positive, got {c}")

    def eta(theta):
        return np.full(np.shape(theta)[0], float(c))

    fourier = (np.array([float(c)]), np.array([0.0])) if d == 2 else None
    return KernelSpec(d, s, eta, float(c), float(c), name=name, fourier=fourier)


def cosine_series(s, coeffs, lam=None, Lam=None, name="cosine-series"):
    """2D kernel ``eta(phi) = c_0 + sum_k c_k cos(2 k phi)``.

    Bounds default to the extrema over the validation grid.
    """
    c = np.asarray(coeffs, dtype=float)
    k = 2.0 * np.arange(c.size)

    def eta(theta):
        phi = np.arctan2(theta[:, 1], theta[:, 0])
        return np.cos(np.outer(phi, k)) @ c

    sample = eta(unit_directions(2))
    lam = float(np.min(sample)) if lam is None else lam
    Lam = float(np.max(sample)) if Lam is None else Lam
    if lam <= 0:
        raise InvalidParameterError("cosine series eta must stay positive")
    return KernelSpec(2, s, eta, lam, Lam, name=name, fourier=(c.copy(), np.zeros_like(c)))


def angular_integral(spec):
    """Integral of eta over the unit sphere (two-point sum when d=1)."""
    if spec.d == 1:
        return float(np.sum(spec(unit_directions(1))))
    theta = unit_directions(2, N_ANGULAR)
    return float(np.sum(spec(theta)) * 2.0 * np.pi / N_ANGULAR)


def angular_matrix(spec):
    """Anisotropy matrix ``A0 = int theta (x) theta eta(theta) dtheta``."""
    if spec.d == 1:
        return np.array([[angular_integral(spec)]])
    theta = unit_directions(2, N_ANGULAR)
    w = spec(theta) * (2.0 * np.pi / N_ANGULAR)
    A0 = (theta * w[:, None]).T @ theta
    return 0.5 * (A0 + A0.T)


# ---------------------------------------------------------------------------
# regularized radial kernel


def powint(a, c, q):
    """``int_a^c t^(q-1) dt`` without cancellation; ``c`` may be ``inf`` when ``q < 0``."""
    if c == a:
        return 0.0
    if math.isinf(c):
        if q >= 0:
            raise DivergentIntegralError(f"tail integral of t^{q - 1} diverges")
        return -a**q / q
    if a == 0.0:
        if q <= 0:
            raise DivergentIntegralError(f"integral of t^{q - 1} diverges at 0")
        return c**q / q
    L = math.log(c / a)
    x = q * L
    if abs(x) > 0.5:
        # limits far apart: no cancellation, and expm1 could overflow
        return (c**q - a**q) / q
    rel = math.expm1(x) / x if abs(x) > 1e-8 else 1.0 + 0.5 * x + x * x / 6.0
    return a**q * L * rel


@dataclass(frozen=True)
class RegularizedKernel:
    d: int
    s: float
    eps: float
    gamma: float
    nu: float

    @property
    def exponent(self):
        return self.d + 2.0 * self.s

    @property
    def c0(self):
        """Value at the origin."""
        e = self.eps
        return e ** (-self.exponent) - self.gamma * e**2 - self.nu * e**3

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inner = self.c0 + self.gamma * r**2 + self.nu * r**3
        with np.errstate(divide="ignore"):
            outer = np.where(r > 0, r, 1.0) ** (-self.exponent)
        out = np.where(r < self.eps, inner, outer)
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        inner = 2.0 * self.gamma * r + 3.0 * self.nu * r**2
        with np.errstate(divide="ignore"):
            outer = -self.exponent * np.where(r > 0, r, 1.0) ** (-self.exponent - 1.0)
        out = np.where(r < self.eps, inner, outer)
        return out if out.ndim else float(out)

    def moment(self, p, a=0.0, b=math.inf):
        return radial_moment(self, p, a, b)


def regularization_parameters(d, s, eps):
    """Closed-form ``(gamma, nu)`` of the cubic splice."""
    ds = d + 2.0 * s
    gamma = -(4.0 + d) * ds * (3.0 + ds) / (4.0 * (1.0 - s)) * eps ** (-ds - 2.0)
    nu = (5.0 + d) * ds * (2.0 + ds) / (6.0 * (1.0 - s)) * eps ** (-ds - 3.0)
    return gamma, nu


def make_regularized_kernel(d, s, eps):
    _check_dim(d)
    _check_order(s)
    if not (eps > 0 and math.isfinite(eps)):
        raise InvalidParameterError(f"regularization radius eps must be positive, got {eps!r}")
    gamma, nu = regularization_parameters(d, s, eps)
    return RegularizedKernel(d, s, float(eps), gamma, nu)


def radial_moment(K, p, a, b):
    """``int_a^b r^p K(r) dr`` from branchwise antiderivatives."""
    if not (0.0 <= a <= b):
        raise InvalidParameterError(f"need 0 <= a <= b, got a={a}, b={b}")
    total = 0.0
    lo, hi = a, min(b, K.eps)
    if lo < hi:
        if lo == 0.0 and p <= -1:
            raise DivergentIntegralError(f"moment p={p} diverges at r=0")
        total += (K.c0 * powint(lo, hi, p + 1.0)
                  + K.gamma * powint(lo, hi, p + 3.0)
                  + K.nu * powint(lo, hi, p + 4.0))
    lo = max(a, K.eps)
    if lo < b:
        q = p - K.exponent + 1.0
        if math.isinf(b) and q >= 0:
            raise DivergentIntegralError(
                f"moment p={p} diverges at infinity (needs p < d + 2s - 1 = {K.exponent - 1})")
        total += powint(lo, b, q)
    return total


def kernel_invariants(K, n_grid=10_000):
    """Relative residuals of the six defining properties of ``K``.

    Returns a dict of name -> residual; every entry should be <= 1e-12
    (for ``signs`` and ``positivity`` the residual is 0 or 1).
    """
    e, ds = K.eps, K.exponent
    target = e ** (-ds)
    inner_at_eps = K.c0 + K.gamma * e**2 + K.nu * e**3
    dleft = 2.0 * K.gamma * e + 3.0 * K.nu * e**2
    dtarget = -ds * e ** (-ds - 1.0)
    singular = powint(0.0, e, 2.0 - 2.0 * K.s)
    regular = radial_moment(K, K.d + 1.0, 0.0, e)
    grid = np.linspace(0.0, 4.0 * e, n_grid)
    return {
        "continuity": abs(inner_at_eps - target) / target,
        "c1_splice": abs(dleft - dtarget) / abs(dtarget),
        "zero_slope_at_origin": abs(float(K.derivative(0.0))) / abs(dtarget),
        "signs": 0.0 if (K.gamma < 0 and K.nu > 0) else 1.0,
        "moment_identity": abs(regular - singular) / singular,
        "positivity": 0.0 if np.all(K(grid) > 0) else 1.0,
    }
