import numpy as np
import pytest

from builders import tables, threshold_war
from crisis_bargaining import (
    DirectMechanism,
    InfeasibilityCertificate,
    audit_mechanism,
    canonical_model,
    check_incentive_compatibility,
    check_monotone_war_propensity,
    construct_peaceful_settlement,
    one_sided_model,
    peace_plausibility,
    war_region,
)


@pytest.mark.parametrize("kwargs, lhs, verdict", [
    ({"cost": 0.2}, 1.1, "implausible"),
    ({"cost": 0.3}, 0.9, "plausible"),
    ({"cost": 0.25}, 1.0, "plausible (boundary)"),
    ({"cost": 0.0}, 1.5, "implausible"),
    ({"cost": 0.2, "gamma": 0.5, "bias": 2.0}, 0.9, "plausible"),
])
def test_plausibility_closed_forms(kwargs, lhs, verdict):
    rep = peace_plausibility(canonical_model(**kwargs))
    assert rep.lhs == pytest.approx(lhs, abs=1e-10)
    assert rep.verdict == verdict


def test_price_of_peace_attached():
    m = canonical_model(0.3)
    rep = peace_plausibility(m, tables(m, 5, 0.0, 0.5, 0.5))
    assert rep.price_of_peace == pytest.approx((0.5, 0.5))


def test_construct_plausible():
    m = canonical_model(0.3)
    mech = construct_peaceful_settlement(m)
    assert isinstance(mech, DirectMechanism)
    assert np.allclose(mech.x1, 0.5) and np.allclose(mech.x2, 0.5) and not mech.pi.any()
    assert audit_mechanism(m, mech).passed


def test_construct_certificate():
    cert = construct_peaceful_settlement(canonical_model(0.2))
    assert isinstance(cert, InfeasibilityCertificate)
    assert cert.lhs == pytest.approx(1.1, abs=1e-10)


def test_construct_needs_citizens_appeased_too():
    m = canonical_model(0.2, gamma=1.0, bias=2.0)
    assert peace_plausibility(m).lhs == pytest.approx(0.7, abs=1e-10)
    cert = construct_peaceful_settlement(m)
    assert isinstance(cert, InfeasibilityCertificate)
    assert cert.demands == pytest.approx((0.55, 0.55), abs=1e-10)
    assert cert.demand_total == pytest.approx(1.1, abs=1e-10)


def test_construct_boundary():
    m = canonical_model(0.25)
    mech = construct_peaceful_settlement(m)
    assert isinstance(mech, DirectMechanism)
    assert audit_mechanism(m, mech).passed


def test_construct_uneven_demands():
    m = one_sided_model((0.3, 0.7), lo=-0.5, hi=-0.3)
    mech = construct_peaceful_settlement(m)
    # demands 0.0 and 0.4; the slack 0.6 is split evenly
    assert mech.x1[0, 0] == pytest.approx(0.3, abs=1e-10)
    assert mech.x2[0, 0] == pytest.approx(0.7, abs=1e-10)


def test_war_region_triangle():
    rep = war_region(canonical_model(0.2), grid=256)
    assert rep.mass == pytest.approx(0.02, abs=2e-3)
    t1, t2 = np.meshgrid(rep.grid1, rep.grid2, indexing="ij")
    assert np.array_equal(rep.indicator, t1 + t2 > 1.8 + 1e-9)


@pytest.mark.parametrize("cost", [0.25, 0.3])
def test_war_region_empty_when_plausible(cost):
    rep = war_region(canonical_model(cost), grid=64)
    assert rep.mass == 0.0 and not rep.indicator.any()


def test_war_region_grid_floor():
    with pytest.raises(ValueError):
        war_region(canonical_model(0.2), grid=8)


def test_war_region_csv():
    text = war_region(canonical_model(0.2), grid=16).to_csv().splitlines()
    assert text[0] == "theta1,theta2,indicator"
    assert len(text) == 1 + 16 * 16
    assert text[-1] == "1,1,1"


def test_monotone_constant():
    m = canonical_model(0.2)
    assert check_monotone_war_propensity(m, tables(m, 5, 0.3, 0.3, 0.3)).ok


def test_monotone_threshold_closed_form():
    m = canonical_model(0.2)
    mech = tables(m, 201, threshold_war(1.5), 0.5, 0.5)
    res = check_monotone_war_propensity(m, mech)
    assert res.ok
    # 1 - F(tau - t) for the indicator; the interpolant ramps over one cell
    t = mech.grid1
    assert np.allclose(res.propensity[0], np.clip(t - 0.5, 0, None), atol=0.5 / 200 + 1e-9)


def test_decreasing_war_fails_and_is_not_ic():
    m = canonical_model(0.2)
    war = lambda a, b: (a < 0.5) * 1.0  # noqa: E731
    res = check_monotone_war_propensity(m, tables(m, 9, war, 0.5, 0.5))
    assert not res.ok and res.state == 0
    for x in (0.2, 0.5, 0.8):
        assert not check_incentive_compatibility(m, tables(m, 9, war, x, 1 - x)).passed


def test_monotone_one_sided_threshold():
    m = one_sided_model()
    mech = tables(m, 9, lambda a, b: (a + b > -0.4) * 1.0, 0.5, 0.5)
    assert check_monotone_war_propensity(m, mech).ok
