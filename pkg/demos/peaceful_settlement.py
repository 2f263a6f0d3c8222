"""Build a peaceful settlement, audit it, and see why shares can move with the
opponent's report but not with one's own.

Run: python3 demos/peaceful_settlement.py
"""

# %%
import numpy as np

from crisis_bargaining import (
    DirectMechanism,
    audit_mechanism,
    canonical_model,
    check_incentive_compatibility,
    construct_peaceful_settlement,
    interim_peace_payoffs,
)

model = canonical_model(0.3)

# %% The constructive settlement: each side gets its top type's demand plus half the slack.
mech = construct_peaceful_settlement(model)
print("shares:", mech.x1[0, 0], mech.x2[0, 0])
print(audit_mechanism(model, mech).to_dict()["passed"])

# %% Shares may depend on the opponent's report. Here state 1 takes theta2 and
# state 2 gets nothing; it's not participation-feasible but it is truthful.
g = model.support(0).linspace(9)
opp = DirectMechanism.from_functions(g, g, 0.0, lambda a, b: b, 0.0)
print("opponent-indexed IC gain:", check_incentive_compatibility(model, opp).max_gain)
V, _ = interim_peace_payoffs(model, opp, 0, g)
print("state 1 peace payoff by type:", np.round(V, 6))

# %% Let a share rise with one's own report and every type claims to be strongest.
own = DirectMechanism.from_functions(g, g, 0.0, lambda a, b: a / 2, 0.5)
ic = check_incentive_compatibility(model, own)
print(f"own-indexed IC gain {ic.max_gain:.3f}: type {ic.true_type} reports {ic.report}")
