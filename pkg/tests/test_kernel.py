import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from twoscale.errors import DivergentIntegralError, InvalidParameterError
from twoscale.kernel import (KernelSpec, angular_integral, angular_matrix, constant_kernel,
                             cosine_series, frac_laplacian_constant, fractional_laplacian,
                             kernel_invariants, make_regularized_kernel, powint, radial_moment,
                             regularization_parameters)

orders = st.floats(0.05, 0.95)
dims = st.sampled_from([1, 2])
radii = st.floats(1e-3, 10.0)


def _solve_splice(d, s, eps):
    # C1 splice and moment identity as a 2x2 system in (gamma, nu); c0 eliminated by continuity
    ds = d + 2 * s
    # continuity fixes c0 = eps^-ds - g eps^2 - n eps^3, the zero-slope condition is built in
    A = np.array([[2 * eps, 3 * eps**2],
                  [eps ** (d + 4) / (d + 4) - eps ** (d + 4) / (d + 2),
                   eps ** (d + 5) / (d + 5) - eps ** (d + 5) / (d + 2)]])
    rhs = np.array([-ds * eps ** (-ds - 1),
                    eps ** (2 - 2 * s) / (2 - 2 * s) - eps ** (2 - 2 * s) / (d + 2)])
    return np.linalg.solve(A, rhs)


@pytest.mark.parametrize("d,s,eps,gamma,nu", [(1, 0.5, 1.0, -25.0, 16.0), (2, 0.5, 1.0, -54.0, 35.0)])
def test_regularization_parameters_known_values(d, s, eps, gamma, nu):
    g, n = regularization_parameters(d, s, eps)
    assert g == pytest.approx(gamma, rel=1e-14)
    assert n == pytest.approx(nu, rel=1e-14)
    assert np.allclose(_solve_splice(d, s, eps), [gamma, nu], rtol=1e-12)


@given(dims, orders, radii)
def test_parameters_match_linear_system(d, s, eps):
    g, n = regularization_parameters(d, s, eps)
    assert g < 0 < n
    assert np.allclose(_solve_splice(d, s, eps), [g, n], rtol=1e-9)


def test_kernel_values():
    K = make_regularized_kernel(1, 0.5, 1.0)
    assert K(2.0) == 0.25
    assert K(0.0) == pytest.approx(10.0, rel=1e-15)
    assert K.c0 == pytest.approx(10.0, rel=1e-15)
    K2 = make_regularized_kernel(2, 0.3, 0.2)
    left = K2.c0 + K2.gamma * 0.2**2 + K2.nu * 0.2**3
    assert left == pytest.approx(0.2 ** -2.6, rel=1e-13)
    assert K2(0.2) == pytest.approx(0.2 ** -2.6, rel=1e-15)


def test_radial_moment_examples():
    K = make_regularized_kernel(1, 0.5, 1.0)
    assert radial_moment(K, 0, 0.0, 1.0) == pytest.approx(17.0 / 3.0, rel=1e-14)
    num = integrate.quad(lambda r: float(K(r)), 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert num == pytest.approx(17.0 / 3.0, rel=1e-12)
    for d, s, eps in [(1, 0.3, 0.5), (2, 0.7, 2.0)]:
        K = make_regularized_kernel(d, s, eps)
        assert radial_moment(K, d - 1, eps, math.inf) == pytest.approx(eps ** (-2 * s) / (2 * s), rel=1e-14)
        exact = eps ** (2 - 2 * s) / (2 - 2 * s)
        assert radial_moment(K, d + 1, 0.0, eps) == pytest.approx(exact, rel=1e-13)


@given(dims, orders, st.floats(0.01, 3.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.integers(0, 4))
def test_radial_moment_matches_quadrature(d, s, eps, u, v, p):
    K = make_regularized_kernel(d, s, eps)
    a, b = sorted((u * 2 * eps, v * 2 * eps))
    if b - a < 1e-9:
        return
    closed = radial_moment(K, p, a, b)
    pts = [eps] if a < eps < b else None
    num = integrate.quad(lambda r: r**p * float(K(r)), a, b, points=pts, epsabs=0, epsrel=1e-13,
                         limit=200)[0]
    assert closed == pytest.approx(num, rel=1e-10)


def test_radial_moment_divergence():
    K = make_regularized_kernel(1, 0.5, 1.0)
    with pytest.raises(DivergentIntegralError):
        radial_moment(K, 1, 0.0, math.inf)
    with pytest.raises(InvalidParameterError):
        radial_moment(K, 0, 2.0, 1.0)


def test_powint_stable():
    assert powint(1.0, 1.0 + 1e-12, 3.0) == pytest.approx(1e-12, rel=1e-9)
    assert powint(0.0, 2.0, 2.0) == 2.0
    assert powint(2.0, math.inf, -1.0) == 0.5


@given(dims, orders, st.floats(1e-3, 1.0))
def test_kernel_invariants_property(d, s, eps):
    inv = kernel_invariants(make_regularized_kernel(d, s, eps))
    assert set(inv) == {"continuity", "c1_splice", "zero_slope_at_origin", "signs",
                        "moment_identity", "positivity"}
    assert max(inv.values()) <= 1e-12


@given(dims, orders, st.floats(1e-3, 1.0))
def test_kernel_monotone_decreasing(d, s, eps):
    K = make_regularized_kernel(d, s, eps)
    r = np.linspace(0, 3 * eps, 2001)
    assert np.all(np.diff(K(r)) <= 1e-12 * K.c0)


def test_frac_laplacian_constant():
    assert frac_laplacian_constant(1, 0.5) == pytest.approx(1 / math.pi, rel=1e-14)
    assert frac_laplacian_constant(2, 0.5) == pytest.approx(0.1591549430918953, rel=1e-13)
    for d in (1, 2):
        for s in (0.1, 0.37, 0.9):
            ref = 4**s * s * special.gamma(s + d / 2) / (np.pi ** (d / 2) * special.gamma(1 - s))
            assert frac_laplacian_constant(d, s) == pytest.approx(ref, rel=1e-13)


def test_angular_integrals():
    one = constant_kernel(2, 0.5, 1.0)
    assert angular_integral(one) == pytest.approx(2 * np.pi, rel=1e-14)
    assert np.allclose(angular_matrix(one), np.pi * np.eye(2), atol=1e-13)
    c = constant_kernel(1, 0.4, 3.0)
    assert angular_integral(c) == 6.0
    assert angular_matrix(c)[0, 0] == 6.0
    aniso = cosine_series(0.5, [1.0, 0.5])
    expect = np.diag([np.pi + np.pi / 4, np.pi - np.pi / 4])
    assert np.allclose(angular_matrix(aniso), expect, atol=1e-13)


@given(st.floats(0.1, 2.0), st.floats(-0.9, 0.9), st.floats(-0.5, 0.5))
def test_anisotropy_matrix_bounds(c0, a1, a2):
    coeffs = [c0, a1 * c0 * 0.6, a2 * c0 * 0.3]
    spec = cosine_series(0.5, coeffs)
    A0 = angular_matrix(spec)
    assert np.allclose(A0, A0.T, atol=1e-15 * np.abs(A0).max())
    assert np.linalg.eigvalsh(A0).min() >= spec.lam * np.pi - 1e-10


def test_fourier_coefficients_fft_matches_series():
    series = cosine_series(0.5, [1.0, 0.3, -0.1])
    generic = KernelSpec(2, 0.5, series.eta, series.lam, series.Lam)
    a, b = generic.fourier_coefficients()
    assert np.allclose(a, [1.0, 0.3, -0.1], atol=1e-14)
    assert np.allclose(b, 0.0, atol=1e-14)


def test_kernel_spec_validation():
    with pytest.raises(InvalidParameterError):
        KernelSpec(2, 0.5, lambda t: 1.0 + 0.5 * t[:, 0], 0.5, 1.5)   # not symmetric
    with pytest.raises(InvalidParameterError):
        constant_kernel(1, 0.5, 2.0).__class__(1, 0.5, lambda t: np.full(len(t), 2.0), 0.5, 1.0)
    with pytest.raises(InvalidParameterError):
        fractional_laplacian(1, 1.2)
    with pytest.raises(InvalidParameterError):
        make_regularized_kernel(1, 0.5, 0.0)
    with pytest.raises(InvalidParameterError):
        cosine_series(0.5, [1.0, 2.0])
