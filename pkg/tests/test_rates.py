import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypflat.errors import DomainError, RegimeError
from hypflat.limitlaw import density, y_scale
from hypflat.params import ModelParams, admissible_pairs
from hypflat.rates import (
    alpha_star,
    beta,
    chaos_variance_order,
    linear_forms,
    minmax_numeric,
    minmax_solve,
    rate_curve,
    rate_profile,
    w,
    w_regime,
    w_variance_order,
)

PAIRS30 = [(p.d, p.k) for p in admissible_pairs(30)]


def test_beta_examples():
    assert beta(4, 3) == pytest.approx(2 / 11, rel=1e-15)
    assert beta(12, 11) == pytest.approx(2 / 3, rel=1e-15)
    assert beta(9, 6) < beta(9, 7) < beta(9, 8)
    with pytest.raises(RegimeError):
        beta(5, 3)


def test_beta_in_unit_interval():
    for d, k in PAIRS30:
        assert 0 < beta(d, k) < 1


def test_w_branches():
    r = 2.5
    assert w_regime(4, 3) == "4k<3d+1" and w(4, 3, r) == pytest.approx(math.exp(-r / 3))
    assert w_regime(5, 4) == "4k=3d+1" and w(5, 4, r) == pytest.approx(r ** (1 / 3) * math.exp(-2 * r / 3))
    assert w_regime(12, 11) == "4k>3d+1" and w(12, 11, r) == pytest.approx(math.exp(-2 * r / 3))
    with pytest.raises(DomainError):
        w(4, 3, 0.0)
    with pytest.raises(RegimeError):
        w(6, 3, 1.0)


# r <= 60 keeps the fastest branch (rate 9) above the double underflow threshold
@given(st.sampled_from(PAIRS30), st.floats(min_value=1.0, max_value=60.0))
def test_w_positive_and_decreasing(dk, r):
    d, k = dk
    a, b = w(d, k, r), w(d, k, r + 0.5)
    assert a > 0 and b < a


@pytest.mark.parametrize("d, k", [(4, 3), (5, 4), (12, 11), (9, 7)])
def test_w_is_cube_root_of_variance_order(d, k):
    o = w_variance_order(d, k)
    for r in (1.0, 3.0, 7.0):
        val = math.exp(o.rate * r) * (r if o.log_factor else 1.0)
        assert w(d, k, r) == pytest.approx(val ** (1 / 3), rel=1e-13)


def test_w_vectorised():
    rs = np.array([1.0, 2.0, 4.0])
    np.testing.assert_allclose(w(4, 3, rs), np.exp(-rs / 3))


def test_w_variance_order_examples():
    assert w_variance_order(4, 3).describe() == "exp(-1 r)"
    o = w_variance_order(5, 4)
    assert (o.rate, o.log_factor) == (-2.0, True)
    assert w_variance_order(12, 11).rate == -2.0 and not w_variance_order(12, 11).log_factor


def test_minmax_examples():
    a, b, v = minmax_solve(4, 3)
    assert (a, b, v) == pytest.approx((6 / 11, 2 / 11, -2 / 11), abs=1e-15)
    assert minmax_solve(9, 7) == pytest.approx((0.3, 0.4, -0.4), abs=1e-15)


def test_minmax_non_first_forms_coincide():
    for d, k in PAIRS30:
        a, b, v = minmax_solve(d, k)
        vals = linear_forms(d, k) @ np.array([a, b, 1.0])
        np.testing.assert_allclose(vals[1:], v, atol=1e-12)
        assert vals[0] <= -b + 1e-12


def test_minmax_numeric_agrees_everywhere():
    for d, k in PAIRS30:
        na, nb, nv = minmax_numeric(d, k)
        assert abs(na - alpha_star(d, k)) <= 1e-9
        assert abs(nb - beta(d, k)) <= 1e-9
        assert abs(nv + beta(d, k)) <= 1e-9


@given(st.sampled_from(PAIRS30), st.floats(0, 3), st.floats(0, 3))
def test_minmax_is_a_lower_bound(dk, a, b):
    d, k = dk
    forms = linear_forms(d, k)
    _, _, v = minmax_solve(d, k)
    assert np.max(forms @ np.array([a, b, 1.0])) >= v - 1e-12


def test_rate_profile():
    prof = rate_profile(4, 3)
    assert prof.beta == prof.beta_star
    assert prof.alpha_star == pytest.approx(6 / 11)
    assert prof.k3_log_factor
    assert not rate_profile(5, 4).k3_log_factor
    assert set(prof.as_dict()) == {"beta", "w_regime", "alpha_star", "beta_star", "k3_log_factor"}


def test_chaos_variance_order_examples():
    o = chaos_variance_order(5, 4, 1)
    assert (o.branch, o.rate, o.log_factor) == ("2i(d-k)<d-1", 6.0, False)
    o = chaos_variance_order(5, 4, 2)
    assert (o.rate, o.log_factor) == (4.0, True)
    assert o.describe() == "r*exp(4 r)"
    o = chaos_variance_order(2, 1, 1)
    assert (o.branch, o.rate, o.log_factor) == ("2i(d-k)>d-1", 1.0, False)
    with pytest.raises(DomainError):
        chaos_variance_order(5, 4, 0)
    with pytest.raises(DomainError):
        chaos_variance_order(5, 5, 1)


def test_first_chaos_order_matches_variance_scaling():
    # i = 1 reproduces e^{2r(k-1)} exactly in the non-Gaussian regime
    for d, k in PAIRS30:
        assert chaos_variance_order(d, k, 1).rate == 2 * (k - 1)


def test_rate_curve_examples():
    assert rate_curve(4, 3, 1, [11.0])[0]["bound"] == pytest.approx(11 * math.exp(-2), rel=1e-14)
    assert rate_curve(13, 12, 1, [3.0])[0]["bound"] == pytest.approx(math.exp(-2), rel=1e-14)
    assert rate_curve(9, 7, 2, [1e-12])[0]["bound"] == pytest.approx(1.0, abs=1e-12)
    rows = rate_curve(5, 4, 1, range(1, 4))
    assert [r["r"] for r in rows] == [1.0, 2.0, 3.0]
    with pytest.raises(RegimeError):
        rate_curve(6, 3, 1, [1.0])
    with pytest.raises(DomainError):
        rate_curve(5, 4, 1, [-1.0])


def test_empirical_rate_slope_is_negative():
    from scipy import stats

    from hypflat.simulate import ks_distance, sample_Yr

    p = ModelParams(5, 4)
    tab = density(p).scaled(y_scale(p))
    rs = [4.0, 6.0, 8.0]
    ks = [ks_distance(sample_Yr(r, p, seed=0, n=100_000).values, tab.cdf_at) for r in rs]
    slope = stats.linregress(rs, np.log(ks)).slope
    assert slope < 0
