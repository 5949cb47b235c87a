import pytest

from hypflat.errors import AdmissibilityError, DomainError, RegimeError
from hypflat.params import InversionSpec, ModelParams, DEFAULT_INVERSION, Regime, admissible_pairs


def test_regimes():
    assert ModelParams(5, 2).regime is Regime.GAUSSIAN
    assert ModelParams(5, 3).regime is Regime.CRITICAL
    assert ModelParams(5, 4).regime is Regime.NON_GAUSSIAN


@pytest.mark.parametrize("d, k, m", [(3, 0, None), (3, 3, None), (4, 2, 3), (4, 3, 0), (4, 2.5, None)])
def test_inadmissible(d, k, m):
    with pytest.raises(AdmissibilityError):
        ModelParams(d, k, m)


def test_intersection_order():
    p = ModelParams(4, 3, 4)
    assert p.order == 4 and p.codim == 1
    assert ModelParams(4, 3).order == 1


def test_require_limit_law_message():
    with pytest.raises(RegimeError, match=r"2k > d\+1"):
        ModelParams(4, 2).require_limit_law()
    assert ModelParams(4, 3).require_limit_law().k == 3


def test_limit_law_forces_k_at_least_three():
    assert all(p.k >= 3 for p in admissible_pairs(30))


def test_admissible_pairs_order_and_count():
    pairs = admissible_pairs(15)
    assert [(p.d, p.k) for p in pairs] == sorted((p.d, p.k) for p in pairs)
    assert len(pairs) == sum(1 for d in range(2, 16) for k in range(1, d) if 2 * k > d + 1)


def test_inversion_spec():
    assert (DEFAULT_INVERSION.T, DEFAULT_INVERSION.M, DEFAULT_INVERSION.N) == (10.0, 200, 26)
    for kw in ({"T": 0.0}, {"M": 1}, {"N": 1}):
        with pytest.raises(DomainError):
            InversionSpec(**kw)
