import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwsense.special import (BI_MAX_ARG, airy_ai, airy_ai_bi, airy_bi, airy_ci, airy_derivatives, bessel_j0,
                             bessel_j1, ellipk, sinc_half)
from oracles import airy_series, bessel_j0_series, ellipk_agm


@pytest.mark.parametrize("k", [0.0, 0.1, 3 / 7, 1 / 3, 0.5, 0.9, 0.99, 0.999999])
def test_ellipk_matches_agm(k):
    assert ellipk(k) == pytest.approx(ellipk_agm(k), rel=1e-12)


def test_ellipk_special_values():
    assert ellipk(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    # K(1/sqrt 2) = Gamma(1/4)^2 / (4 sqrt(pi))
    assert ellipk(1 / math.sqrt(2)) == pytest.approx(math.gamma(0.25) ** 2 / (4 * math.sqrt(math.pi)), rel=1e-14)


@pytest.mark.parametrize("k", [-0.1, 1.0, 1.5, float("nan")])
def test_ellipk_domain(k):
    with pytest.raises(ValueError):
        ellipk(k)


@given(st.floats(min_value=0.0, max_value=0.999))
def test_ellipk_property_against_agm(k):
    assert ellipk(k) == pytest.approx(ellipk_agm(k), rel=1e-12)


def test_ellipk_vectorised():
    ks = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(ellipk(ks), [ellipk_agm(k) for k in ks], rtol=1e-12)


@pytest.mark.parametrize("x", [-10.0, -6.5, -3.3, -1.0, 0.0, 0.5, 2.0, 4.7, 7.0])
def test_airy_matches_series(x):
    ai, bi, aip, bip = airy_series(x)
    assert airy_ai(x) == pytest.approx(ai, rel=1e-10, abs=1e-14)
    assert airy_bi(x) == pytest.approx(bi, rel=1e-10, abs=1e-14)
    d_ai, d_bi = airy_derivatives(x)
    assert d_ai == pytest.approx(aip, rel=1e-10, abs=1e-14)
    assert d_bi == pytest.approx(bip, rel=1e-10, abs=1e-14)


@given(st.floats(min_value=-8.0, max_value=8.0))
@settings(max_examples=40, deadline=None)
def test_airy_property_against_series(x):
    ai, bi, _, _ = airy_series(x)
    assert airy_ai(x) == pytest.approx(ai, rel=1e-10, abs=1e-13)
    assert airy_bi(x) == pytest.approx(bi, rel=1e-10, abs=1e-13)


@given(st.floats(min_value=-300.0, max_value=30.0))
def test_airy_wronskian(x):
    ai, bi = airy_ai_bi(x)
    aip, bip = airy_derivatives(x)
    assert ai * bip - aip * bi == pytest.approx(1 / math.pi, rel=1e-10)


def test_airy_ci_is_bi_plus_i_ai():
    x = np.linspace(-20, 5, 11)
    ci = airy_ci(x)
    np.testing.assert_array_equal(ci.real, airy_bi(x))
    np.testing.assert_array_equal(ci.imag, airy_ai(x))


def test_airy_ci_modulus_smooth_far_left():
    # |Ci(x)| -> 1 / (sqrt(pi) |x|^{1/4}) without oscillation
    x = np.array([-200.0, -250.0, -300.0])
    np.testing.assert_allclose(np.abs(airy_ci(x)), 1 / (math.sqrt(math.pi) * np.abs(x) ** 0.25), rtol=1e-5)


def test_bi_overflow_raises():
    with pytest.raises(OverflowError):
        airy_bi(BI_MAX_ARG + 1)
    with pytest.raises(OverflowError):
        airy_ci(np.array([0.0, 200.0]))
    assert airy_ai(200.0) >= 0


def test_airy_rejects_non_finite():
    with pytest.raises(ValueError):
        airy_ai(float("nan"))
    with pytest.raises(ValueError):
        airy_ai(-1e5)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.404825557695773, 7.3, 25.0])
def test_bessel_j0_series(x):
    assert bessel_j0(x) == pytest.approx(bessel_j0_series(x), rel=1e-12, abs=1e-15)


def test_bessel_j0_first_zero_by_bisection():
    lo, hi = 2.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if bessel_j0(mid) > 0:
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(2.404825557695773, rel=1e-14)


def test_bessel_derivative_relation():
    # J0' = -J1, checked by a central difference
    x = np.linspace(0.5, 20, 40)
    h = 1e-5
    np.testing.assert_allclose((bessel_j0(x + h) - bessel_j0(x - h)) / (2 * h), -bessel_j1(x), atol=1e-9)


def test_bessel_rejects_negative():
    with pytest.raises(ValueError):
        bessel_j0(-1.0)
    with pytest.raises(ValueError):
        bessel_j1(np.array([1.0, -0.5]))


def test_sinc_half():
    assert sinc_half(1, 0.0) == 1.0
    assert sinc_half(1, 0.4) == pytest.approx(math.sin(0.2 * math.pi) / (0.2 * math.pi), rel=1e-15)
    np.testing.assert_allclose(sinc_half(np.arange(1, 4), 0.4),
                               [math.sin(n * 0.2 * math.pi) / (n * 0.2 * math.pi) for n in (1, 2, 3)], rtol=1e-15)


@pytest.mark.parametrize("n,delta", [(0, 0.4), (1.5, 0.4), (1, -0.1), (1, 1.0)])
def test_sinc_half_domain(n, delta):
    with pytest.raises(ValueError):
        sinc_half(n, delta)
