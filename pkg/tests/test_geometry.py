import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypflat.covariance import CATALAN, j_integral
from hypflat.errors import AdmissibilityError, DomainError
from hypflat.geometry import (
    A11,
    A22,
    C_const,
    c1_const,
    c2_const,
    cosh_ratio_cm1,
    g,
    g_prefactor,
    g_r,
    g_r_arcosh,
    g_r_closed,
    mean_F1,
    sinh_power_area,
    slice_volume,
)
from hypflat.limitlaw import mu_density, sigma2
from hypflat.params import ModelParams
from hypflat.special import omega

mpmath.mp.dps = 30


def test_g_examples():
    assert g(0.0, 3) == pytest.approx(math.pi / 2, rel=1e-15)
    for k in range(2, 9):
        assert g(0.0, k) == pytest.approx(omega(k) / ((k - 1) * 2 ** (k - 1)), rel=1e-15)
    vals = g(np.linspace(0, 40, 200), 4)
    assert np.all(np.diff(vals) < 0) and vals[-1] > 0


def test_slice_volume_examples():
    # k = 1: the slice is a segment of length 2 arcosh(cosh r / cosh s)
    ref = 2 * float(mpmath.acosh(mpmath.cosh(2) / mpmath.cosh(0.5)))
    assert slice_volume(0.5, 2.0, 1) == pytest.approx(ref, rel=1e-14)
    assert slice_volume(0.5, 2.0, 1) == pytest.approx(3.74956, abs=1e-5)
    assert slice_volume(2.0, 2.0, 3) == 0.0
    assert slice_volume(2.5, 2.0, 3) == 0.0
    # s = 0: volume of a hyperbolic k-ball of radius r
    for k, r in [(2, 1.5), (3, 2.0), (5, 4.0)]:
        ball = omega(k) * float(mpmath.quad(lambda u: mpmath.sinh(u) ** (k - 1), [0, r]))
        assert slice_volume(0.0, r, k) == pytest.approx(ball, rel=1e-13)


@given(
    st.integers(min_value=1, max_value=9),
    st.floats(min_value=1e-10, max_value=60.0),
)
def test_sinh_power_area_against_mpmath(k, x):
    # y = cosh u and t = x v turn the area into x^{p+1} int_0^1 v^p (2 + x v)^p dv,
    # p = (k-2)/2; the rescaling keeps mpmath's absolute tolerance meaningful
    xm = mpmath.mpf(x)
    pw = mpmath.mpf(k - 2) / 2
    ref = float(xm ** (pw + 1) * mpmath.quad(lambda v: v ** pw * (2 + xm * v) ** pw, [0, 1]))
    assert sinh_power_area(k, x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("k", range(1, 9))
def test_sinh_power_area_tiny_argument(k):
    # arcosh(1 + x) ~ sqrt(2x) and sinh u ~ u, so the area is (2x)^{k/2}/k to O(x)
    for x in (1e-30, 1e-100, 1e-250):
        assert sinh_power_area(k, x) == pytest.approx((2 * x) ** (k / 2) / k, rel=1e-12)


def test_sinh_power_area_series_switch_continuity():
    for k in range(1, 9):
        lo, hi = sinh_power_area(k, np.array([0.5 - 1e-12, 0.5 + 1e-12]))
        assert hi >= lo and hi - lo <= 1e-10 * hi


def test_cosh_ratio_cancellation_free():
    s, r = 5.0 - 1e-9, 5.0
    ref = float(mpmath.cosh(r) / mpmath.cosh(mpmath.mpf(s)) - 1)
    assert cosh_ratio_cm1(s, r).item() == pytest.approx(ref, rel=1e-9)


def test_g_r_routes_agree_on_grid():
    worst = 0.0
    for k in range(2, 9):
        for r in (1.0, 2.0, 5.0, 10.0):
            for s in np.linspace(0.0, r, 23):
                a = g_r_arcosh(s, r, k)
                b = g_r_closed(s, r, k)
                worst = max(worst, abs(a - b) / max(1.0, g(s, k)))
                assert g_r(s, r, k) == pytest.approx(b, rel=1e-10, abs=1e-12)
    assert worst <= 1e-10


def test_g_r_examples():
    assert g_r_arcosh(1.0, 3.0, 4) == pytest.approx(g_r_closed(1.0, 3.0, 4), abs=1e-10)
    assert g_r_closed(0.5, 2.0, 3) == pytest.approx(g_r_arcosh(0.5, 2.0, 3), abs=1e-10)
    assert g_r_closed(3.0, 2.0, 3) == 0.0
    # k = 2 has no quadrature: omega_2 (cosh r / cosh s - 1) e^{-r}
    ref = 2 * math.pi * (math.cosh(1.7) / math.cosh(0.3) - 1.0) * math.exp(-1.7)
    assert g_r_closed(0.3, 1.7, 2) == pytest.approx(ref, rel=1e-14)


@given(
    st.integers(min_value=2, max_value=10),
    st.floats(min_value=0.05, max_value=25.0),
    st.floats(min_value=0.0, max_value=1.2),
)
def test_g_r_dominated_by_g(k, r, frac):
    s = frac * r
    assert g_r(s, r, k) <= g(s, k) * (1 + 1e-12)


def _g_bound_2(s, r, k):
    wk = omega(k)
    first = wk / (k - 1) * math.exp(-(k - 1) * r)
    if s > r:
        return first
    if k == 3:
        integral = r - s
    else:
        integral = (math.exp((k - 3) * r) - math.exp((k - 3) * s)) / (k - 3)
    return first + wk * (k - 1) * math.exp(-(k - 1) * r - (k - 3) * s) * integral


def test_difference_bound_on_grid():
    for k in range(3, 9):
        for r in (1.0, 2.0, 5.0, 10.0):
            for s in np.linspace(0.0, 1.3 * r, 40):
                diff = g(s, k) - g_r(s, r, k)
                assert diff <= _g_bound_2(s, r, k) * (1 + 1e-12) + 1e-300


@pytest.mark.parametrize("d, k", [(4, 3), (5, 4), (7, 5), (9, 7)])
@pytest.mark.parametrize("s0", [1.0, 3.0, 5.0])
def test_tail_integral_bound(d, k, s0):
    r = s0 + 4.0
    bound = 2 * omega(k) ** 2 / ((k - 1) ** 2 * (2 * k - d - 1)) * math.exp(-(2 * k - d - 1) * s0)
    f = lambda s: (g_r(s, r, k) ** 2 + g(s, k) ** 2) * mu_density(s, ModelParams(d, k))
    val = sum(
        float(np.sum(w * np.array([f(x) for x in xs])))
        for xs, w in [_gl(s0, 80.0)]
    )
    assert val <= bound


def _gl(lo, hi, panels=400):
    x, w = np.polynomial.legendre.leggauss(12)
    edges = np.linspace(lo, hi, panels + 1)
    nodes = ((edges[:-1] + edges[1:])[:, None] / 2 + np.diff(edges)[:, None] / 2 * x).ravel()
    weights = (np.diff(edges)[:, None] / 2 * w).ravel()
    return nodes, weights


def test_C_const_examples():
    assert C_const(ModelParams(5, 4, 1)) == pytest.approx(1.0, rel=1e-15)
    assert C_const(ModelParams(2, 1, 2)) == pytest.approx(2 / math.pi, rel=1e-14)
    assert C_const(ModelParams(3, 2, 2)) == pytest.approx(math.pi / 4, rel=1e-14)


def test_c_constants():
    p = ModelParams(4, 2)
    assert c1_const(p) == pytest.approx(omega(2) ** 3, rel=1e-15)
    assert c2_const(ModelParams(2, 1)) == pytest.approx(1.0, rel=1e-14)


def test_A11_small_r_and_monotone():
    p = ModelParams(5, 4)
    assert A11(1e-4, p) < 1e-12
    assert mean_F1(1e-4, p) < 1e-8
    assert mean_F1(2.0, p) < mean_F1(3.0, p)


def test_A11_matches_mpmath():
    p = ModelParams(5, 4)
    r = 3.0
    vol = lambda s: omega(4) * mpmath.quad(
        lambda u: mpmath.sinh(u) ** 3, [0, mpmath.acosh(mpmath.cosh(r) / mpmath.cosh(s))]
    )
    ref = omega(1) * mpmath.quad(lambda s: vol(s) ** 2 * mpmath.cosh(s) ** 4, [0, 1, 2, r])
    assert A11(r, p) == pytest.approx(float(ref), rel=1e-9)
    ref_mean = omega(1) * mpmath.quad(lambda s: vol(s) * mpmath.cosh(s) ** 4, [0, 1, 2, r])
    assert mean_F1(r, p) == pytest.approx(float(ref_mean), rel=1e-9)


def test_A11_approaches_var_Y():
    p = ModelParams(4, 3)
    r = 15.0
    scaled = A11(r, p, scale_exponent=2 * r * (p.k - 1))
    assert scaled == pytest.approx(g_prefactor(3) ** 2 * sigma2(p), rel=1e-3)


def test_A11_d_equals_2k_limit():
    p = ModelParams(4, 2)
    r = 20.0
    assert A11(r, p, scale_exponent=r * (p.d - 1)) == pytest.approx(math.pi ** 3 / 3, rel=1e-4)
    p1 = ModelParams(2, 1)
    assert A11(r, p1, scale_exponent=r) == pytest.approx(16 * CATALAN, rel=1e-3)


def test_A22():
    p = ModelParams(2, 1)
    assert A22(1e-6, p) < 1e-11
    assert A22(3.0, p) == pytest.approx(math.cosh(3.0) - 1.0, rel=1e-12)
    assert A22(20.0, p, scale_exponent=20.0) == pytest.approx(0.5, abs=1e-8)
    p4 = ModelParams(4, 2)
    lim = c2_const(p4) / (3 * 2 ** 3)
    assert A22(20.0, p4, scale_exponent=60.0) == pytest.approx(lim, rel=1e-4)
    with pytest.raises(AdmissibilityError):
        A22(1.0, ModelParams(5, 4))


def test_domain_errors():
    with pytest.raises(DomainError):
        slice_volume(1.0, 0.0, 3)
    with pytest.raises(DomainError):
        g(1.0, 1)
    with pytest.raises(DomainError):
        A11(-1.0, ModelParams(4, 3))
