import numpy as np
import pytest
from scipy.optimize import linprog

from crisis_bargaining import (
    build_program,
    canonical_model,
    check_feasibility_and_peace,
    construct_peaceful_settlement,
    minimize_war_probability,
    one_sided_model,
)
from crisis_bargaining.model import (
    BeliefDistribution,
    CrisisModel,
    State,
    TypeSpace,
    WarTechnology,
    validate_model,
)
from crisis_bargaining.payoffs import interim_citizen_war_payoff, interim_war_payoff


def test_counts_two_by_two():
    prog = build_program(canonical_model(0.2), 2, 2)
    assert prog.counts() == {"ic": 4, "leader_ir": 4, "citizen_ir": 4, "bound": 12}
    assert prog.n_vars == 12
    assert prog.A_ub.shape == (24, 12)


def test_counts_general():
    n1, n2 = 4, 3
    prog = build_program(canonical_model(0.2), n1, n2)
    total = n1 * (n1 - 1) + n2 * (n2 - 1) + 2 * (n1 + n2) + 3 * n1 * n2
    assert len(prog.labels) == total
    assert prog.mass1.sum() == pytest.approx(1.0) and prog.mass2.sum() == pytest.approx(1.0)


def test_too_small():
    with pytest.raises(ValueError):
        build_program(canonical_model(0.2), 1, 3)


def _vector(prog, mech):
    N = mech.pi.size
    z = np.zeros(3 * N)
    z[:N] = mech.pi.ravel()
    z[N:2 * N] = ((1 - mech.pi) * mech.x1).ravel()
    z[2 * N:] = ((1 - mech.pi) * mech.x2).ravel()
    return z


def test_constructed_settlement_is_feasible_point():
    m = canonical_model(0.3)
    prog = build_program(m, 5, 5)
    z = _vector(prog, construct_peaceful_settlement(m, grid=5))
    assert np.all(prog.A_ub @ z <= prog.b_ub + 1e-12)


def test_corner_constraints_rule_out_peace():
    # the two strongest-node participation rows plus the budget force sum x > 1
    prog = build_program(canonical_model(0.2), 5, 5)
    demand = [float(prog.interim_war(i)[-1]) for i in (0, 1)]
    assert sum(demand) > 1.0


def test_plausible_objective_zero():
    res = minimize_war_probability(build_program(canonical_model(0.3), 5, 5))
    assert res.objective == pytest.approx(0.0, abs=1e-12)
    assert res.audit.passed and res.audit.feasibility.peaceful
    assert res.rising_utility is None


def test_implausible_objective_positive_and_matches_highs():
    prog = build_program(canonical_model(0.2), 5, 5)
    res = minimize_war_probability(prog)
    ref = linprog(prog.c, prog.A_ub, prog.b_ub, method="highs")
    assert res.objective > 0
    assert res.objective == pytest.approx(ref.fun, abs=1e-9)
    assert check_feasibility_and_peace(res.mechanism).feasible
    assert res.node_ic_gain <= 1e-6
    state, low, high, gap = res.rising_utility
    assert low < high and gap > 1e-8


def test_strict_balance():
    prog = build_program(canonical_model(0.3), 4, 4, strict_balance=True)
    assert prog.A_eq.shape[0] == 16
    res = minimize_war_probability(prog, audit=False)
    assert np.allclose(res.pi + res.y1 + res.y2, 1.0)


@pytest.mark.parametrize("cost", [0.1, 0.2, 0.3])
def test_objective_zero_iff_corner_demands_fit(cost):
    for bias in (1.0, 2.0):
        m = canonical_model(cost, bias=bias)
        prog = build_program(m, 4, 4)
        lead = [prog.interim_war(i)[-1] for i in (0, 1)]
        cit = [prog.interim_war(i, citizen=True)[-1] for i in (0, 1)]
        fits = sum(max(a, b) for a, b in zip(lead, cit)) <= 1 + 1e-8
        res = minimize_war_probability(prog, audit=False)
        assert (res.objective <= 1e-8) == fits


def test_objective_nonincreasing_in_cost():
    objs = [minimize_war_probability(build_program(canonical_model(c), 4, 4), audit=False).objective
            for c in (0.05, 0.1, 0.15, 0.2, 0.25)]
    assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))


def _point_model(t1, t2):
    eps = 1e-9
    states = tuple(State(TypeSpace(t, t + eps), BeliefDistribution("uniform", TypeSpace(t, t + eps)))
                   for t in (t1, t2))
    return validate_model(CrisisModel(states, WarTechnology.one_sided((0.5, 0.5))))


@pytest.mark.parametrize("t1, t2", [(-0.1, -0.1), (0.1, 0.1), (-0.25, 0.2), (0.05, 0.0)])
def test_single_type_split_the_surplus(t1, t2):
    m = _point_model(t1, t2)
    W = [float(interim_war_payoff(m, i, m.support(i).lo)) for i in (0, 1)]
    res = minimize_war_probability(build_program(m, 2, 2), audit=False)
    # one type each: U_i >= W_i and the budget give (1 - pi)(W1 + W2) <= 1 - pi
    expected = 0.0 if W[0] + W[1] <= 1 + 1e-8 else 1.0
    assert res.objective == pytest.approx(expected, abs=1e-7)


def test_one_sided_solve_reaudited():
    m = one_sided_model((0.5, 0.5), lo=-0.2, hi=0.1)
    res = minimize_war_probability(build_program(m, 4, 4))
    assert res.audit is not None
    assert res.node_ic_gain <= 1e-6
    top = [float(interim_citizen_war_payoff(m, i, 0.1)) for i in (0, 1)]
    assert sum(top) == pytest.approx(1.2)
    assert res.objective > 0


def test_log_fields():
    res = minimize_war_probability(build_program(canonical_model(0.2), 3, 3))
    log = res.log()
    for key in ("objective", "iterations", "node_ic_gain", "audit", "rising_utility_witness"):
        assert key in log
