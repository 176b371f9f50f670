import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wedgekrein import specfun
from wedgekrein.specfun import DomainError


def series_j(nu, x, terms=400):
    """Independent ascending series for J_nu, summed in 40-digit arithmetic (oracle)."""
    with mpmath.workdps(40):
        x, nu = mpmath.mpf(x), mpmath.mpf(nu)
        total, term = mpmath.mpf(0), (x / 2) ** nu / mpmath.gamma(nu + 1)
        for k in range(terms):
            total += term
            term *= -(x * x / 4) / ((k + 1) * (k + 1 + nu))
            if abs(term) < mpmath.mpf(10) ** -38 * abs(total):
                break
        return float(total)


def series_i(nu, x, terms=200):
    total, term = 0.0, (x / 2) ** nu / math.gamma(nu + 1)
    for k in range(terms):
        total += term
        term *= (x * x / 4) / ((k + 1) * (k + 1 + nu))
        if term < 1e-17 * abs(total):
            break
    return total


def bisect_zero(f, a, b, tol=1e-13):
    fa = f(a)
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = f(c)
        if fa * fc <= 0:
            b = c
        else:
            a, fa = c, fc
    return 0.5 * (a + b)


class TestGamma:
    @pytest.mark.parametrize("x,expected", [(1.0, 1.0), (0.5, math.sqrt(math.pi)), (-0.5, -2 * math.sqrt(math.pi))])
    def test_values(self, x, expected):
        assert specfun.gamma_fn(x) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, -2.0])
    def test_poles(self, x):
        with pytest.raises(DomainError):
            specfun.gamma_fn(x)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(-3, 10).filter(lambda x: min(abs(x - k) for k in range(-3, 1)) > 1e-3 and abs(x + 1) > 1e-3))
    def test_recurrence(self, x):
        assert specfun.gamma_fn(x + 1) == pytest.approx(x * specfun.gamma_fn(x), rel=1e-10)

    @pytest.mark.parametrize("beta", np.linspace(0.51, 0.99, 9))
    def test_reflected_ratio(self, beta):
        lhs = specfun.gamma_fn(-beta) / specfun.gamma_fn(beta)
        rhs = -specfun.gamma_fn(1 - beta) / specfun.gamma_fn(1 + beta)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestBesselJ:
    def test_values(self):
        assert specfun.bessel_j(0, 0) == 1.0
        assert abs(specfun.bessel_j(0.5, math.pi)) < 1e-15
        assert abs(specfun.bessel_j(-0.5, math.pi / 2)) < 1e-15

    @pytest.mark.parametrize("nu", [-0.75, -2 / 3, 0.0, 2 / 3, 1.3, 4.5])
    @pytest.mark.parametrize("x", [0.01, 0.7, 3.0, 11.0, 24.0])
    def test_against_series(self, nu, x):
        ref = series_j(nu, x)
        assert specfun.bessel_j(nu, x) == pytest.approx(ref, rel=1e-10, abs=1e-10 * abs(series_j(abs(nu), x)) + 1e-14)

    @pytest.mark.parametrize("x", [0.3, 2.0, 17.0, 45.0])
    def test_half_integer_closed_forms(self, x):
        assert specfun.bessel_j(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x), rel=1e-10, abs=1e-15)
        assert specfun.bessel_j(-0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.cos(x), rel=1e-10, abs=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            specfun.bessel_j(0.5, -1.0)
        with pytest.raises(DomainError):
            specfun.bessel_j(-0.5, 0.0)
        with pytest.raises(DomainError):
            specfun.bessel_j(-1.5, 1.0)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0.05, 4.0), st.floats(0.5, 40.0))
    def test_recurrence(self, nu, x):
        lhs = specfun.bessel_j(nu - 1, x) + specfun.bessel_j(nu + 1, x)
        rhs = 2 * nu / x * specfun.bessel_j(nu, x)
        scale = max(abs(specfun.bessel_j(nu - 1, x)), abs(specfun.bessel_j(nu + 1, x)))
        assert abs(lhs - rhs) <= 1e-8 * scale

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.51, 0.99), st.floats(0.2, 30.0))
    def test_wronskian(self, nu, x):
        h = 1e-5 * max(1.0, x)

        def d(v):
            return (specfun.bessel_j(v, x + h) - specfun.bessel_j(v, x - h)) / (2 * h)

        w = specfun.bessel_j(nu, x) * d(-nu) - specfun.bessel_j(-nu, x) * d(nu)
        exact = -2 * math.sin(nu * math.pi) / (math.pi * x)
        assert w == pytest.approx(exact, rel=1e-6)

    def test_derivative(self):
        nu, x, h = 2 / 3, 1.7, 1e-6
        fd = (specfun.bessel_j(nu, x + h) - specfun.bessel_j(nu, x - h)) / (2 * h)
        assert specfun.bessel_j_prime(nu, x) == pytest.approx(fd, rel=1e-8)


class TestBesselI:
    def test_values(self):
        assert specfun.bessel_i(0, 0) == 1.0
        assert specfun.bessel_i(0.5, 1.0) == pytest.approx(0.9376748882, rel=1e-10)
        # closed form sqrt(2/pi) cosh(1) = 1.2312002146 (a commonly quoted 1.2312445735 is off in the 5th digit)
        assert specfun.bessel_i(-0.5, 1.0) == pytest.approx(1.2312002145929675, rel=1e-10)
        assert specfun.bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)

    @pytest.mark.parametrize("nu", [-2 / 3, 2 / 3, 1.5, 3.2])
    @pytest.mark.parametrize("x", [0.05, 1.0, 6.0, 20.0])
    def test_against_series(self, nu, x):
        assert specfun.bessel_i(nu, x) == pytest.approx(series_i(nu, x), rel=1e-10)

    def test_scaled(self):
        for x in (0.5, 5.0, 40.0):
            assert specfun.bessel_ie(2 / 3, x) == pytest.approx(specfun.bessel_i(2 / 3, x) * math.exp(-x), rel=1e-12)


class TestMacdonald:
    def test_small_x(self):
        for x in (1e-3, 1e-4, 1e-6):
            approx = -math.log(x / 2) - np.euler_gamma
            assert abs(specfun.bessel_k0(x) - approx) < 2 * x * x * abs(math.log(x)) + 1e-12

    def test_quadrature_oracle(self):
        ref = integrate.quad(lambda t: math.exp(-math.cosh(t)), 0, 40.0, epsabs=1e-14, limit=200)[0]
        assert specfun.bessel_k0(1.0) == pytest.approx(ref, rel=1e-10)

    def test_monotone(self):
        xs = np.linspace(5, 50, 40)
        vals = specfun.bessel_k0(xs)
        assert np.all(np.diff(vals) < 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            specfun.bessel_k0(0.0)


class TestZeros:
    def test_half_order(self):
        z = specfun.bessel_j_zeros(0.5, 20)
        assert np.allclose(z, math.pi * np.arange(1, 21), atol=1e-10)

    def test_order_zero(self):
        oracle = bisect_zero(lambda x: series_j(0.0, x), 2.0, 3.0)
        assert specfun.bessel_j_zero(0.0, 1) == pytest.approx(2.4048255577, abs=1e-10)
        assert specfun.bessel_j_zero(0.0, 1) == pytest.approx(oracle, abs=1e-10)

    def test_interlacing(self):
        j = specfun.bessel_j_zero(2 / 3, 1)
        assert math.pi < j < specfun.bessel_j_zero(1.0, 1)
        assert series_j(2 / 3, j - 1e-6) * series_j(2 / 3, j + 1e-6) < 0

    @pytest.mark.parametrize("nu", [0.0, 2 / 3, 4 / 3, 7.5, 26.0])
    def test_residuals_and_order(self, nu):
        z = specfun.bessel_j_zeros(nu, 60)
        assert np.all(np.diff(z) > 0)
        assert np.abs(specfun.bessel_j(nu, z)).max() < 1e-9

    def test_invalid_index(self):
        with pytest.raises((ValueError, DomainError)):
            specfun.bessel_j_zero(0.5, 0)


class TestLogBessel:
    @pytest.mark.parametrize("nu", [0.7, 5.0, 40.0, 300.0])
    @pytest.mark.parametrize("x", [1e-3, 0.5, 10.0, 200.0])
    def test_against_mpmath(self, nu, x):
        assert float(specfun.log_bessel_i(nu, x)) == pytest.approx(float(mpmath.log(mpmath.besseli(nu, x))), rel=1e-9, abs=1e-9)
        assert float(specfun.log_bessel_k(nu, x)) == pytest.approx(float(mpmath.log(mpmath.besselk(nu, x))), rel=1e-9, abs=1e-9)
