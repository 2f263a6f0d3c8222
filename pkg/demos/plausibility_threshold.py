"""Where does peace stop being achievable as the cost of war falls?

Run: python3 demos/plausibility_threshold.py
"""

# %% Setup: uniform types on [0, 1], winning odds 1/2 + (t1 - t2)/2, equal costs.
import numpy as np

from crisis_bargaining import canonical_model, peace_plausibility, war_region

# %% Sweep the common cost. The strongest types jointly demand 1.5 - 2c,
# so the unit pie covers them once c reaches 0.25.
print(f"{'cost':>6} {'lhs':>8}  verdict")
for c in np.round(np.arange(0.15, 0.36, 0.025), 3):
    rep = peace_plausibility(canonical_model(float(c)))
    print(f"{c:6.3f} {rep.lhs:8.4f}  {rep.verdict}")

# %% Below the threshold some type pairs cannot be bought off. Each type needs at
# least its own war value, so those pairs are the ones whose demands sum past 1:
# the corner t1 + t2 > 1 + 4c (a triangle of area 0.02 when c = 0.2).
for c in (0.15, 0.2, 0.22):
    rep = war_region(canonical_model(c), grid=256)
    print(f"c={c}: grid mass {rep.mass:.4f}, triangle {0.5 * (1 - 4 * c) ** 2:.4f}")
