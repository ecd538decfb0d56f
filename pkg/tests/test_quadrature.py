import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoscale.errors import InvalidParameterError, QuadratureError
from twoscale.quadrature import integrate
from twoscale.rates import fit_rate


def test_smooth_integrals():
    v, _ = integrate(np.sin, 0.0, np.pi)
    assert v == pytest.approx(2.0, rel=1e-13)
    v, _ = integrate(lambda x: np.exp(-x * x), -8, 8)
    assert v == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_endpoint_singularity():
    v, _ = integrate(lambda x: (1 - x * x) ** 0.25, -1, 1, rtol=1e-10)
    exact = math.sqrt(math.pi) * math.gamma(1.25) / math.gamma(1.75)
    assert v == pytest.approx(exact, rel=1e-9)


def test_breakpoints_kink():
    v, _ = integrate(lambda x: np.abs(x - 0.3), 0, 1, breakpoints=[0.3])
    assert v == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-14)


def test_budget_exhaustion():
    with pytest.raises(QuadratureError) as exc:
        integrate(lambda x: np.sin(1 / x) / x, 1e-12, 1, rtol=1e-14, max_panels=64)
    assert exc.value.where is not None


def test_empty_interval():
    assert integrate(np.cos, 1.0, 1.0) == (0.0, 0.0)


@given(st.integers(0, 7), st.floats(0.1, 3.0))
def test_polynomials_exact(k, b):
    v, _ = integrate(lambda x: x**k, 0.0, b)
    assert v == pytest.approx(b ** (k + 1) / (k + 1), rel=1e-13)


def test_fit_rate_examples():
    h = 2.0 ** -np.arange(3, 8)
    slope, r2 = fit_rate(h, 3 * h**2)
    assert slope == pytest.approx(2.0, abs=1e-12) and r2 == pytest.approx(1.0)
    h = 2.0 ** -np.arange(10, 20)
    slope, _ = fit_rate(h, np.maximum(h, h**1.5))
    assert slope == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-3, 3), st.floats(1e-3, 1e3))
def test_fit_rate_recovers_power(p, c):
    h = np.geomspace(1e-3, 0.5, 6)
    slope, r2 = fit_rate(h, c * h**p)
    assert slope == pytest.approx(p, abs=1e-9)


def test_fit_rate_degenerate():
    with pytest.raises(InvalidParameterError):
        fit_rate([0.1, 0.2], [1, 2])
    with pytest.raises(InvalidParameterError):
        fit_rate([0.1, 0.2, 0.3], [1, 0, 2])
    with pytest.raises(InvalidParameterError):
        fit_rate([0.1, 0.1, 0.1], [1, 2, 3])
