"""Ready-made models used in the demos and tests."""

from __future__ import annotations

from .model import (
    AudienceCostRule,
    CrisisModel,
    State,
    TypeSpace,
    WarTechnology,
    ZERO_AUDIENCE_COST,
    uniform,
    validate_model,
)


def _pair(v):
    if isinstance(v, (tuple, list)):
        return tuple(float(a) for a in v)
    return (float(v), float(v))


def canonical_model(cost=0.2, gamma=1.0, bias=1.0, audience_cost=None) -> CrisisModel:
    """Uniform types on [0, 1] with ``p_1 = 1/2 + (theta_1 - theta_2)/2``.

    ``cost``, ``gamma`` and ``bias`` take a scalar (both states) or a pair.
    """
    costs, gammas, biases = _pair(cost), _pair(gamma), _pair(bias)
    rules = audience_cost if audience_cost is not None else (ZERO_AUDIENCE_COST,) * 2
    if isinstance(rules, AudienceCostRule):
        rules = (rules, rules)
    states = tuple(
        State(TypeSpace(0.0, 1.0), uniform(0.0, 1.0), gammas[i], biases[i], rules[i])
        for i in (0, 1)
    )
    return validate_model(CrisisModel(states, WarTechnology.linear_difference(0.5, 0.5, costs)))


def one_sided_model(p=(0.5, 0.5), lo=-0.5, hi=-0.1, gamma=1.0, bias=1.0) -> CrisisModel:
    """Fixed winning odds; each state's type is minus its war cost."""
    gammas, biases = _pair(gamma), _pair(bias)
    states = tuple(
        State(TypeSpace(lo, hi), uniform(lo, hi), gammas[i], biases[i]) for i in (0, 1)
    )
    return validate_model(CrisisModel(states, WarTechnology.one_sided(p)))
