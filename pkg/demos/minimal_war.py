"""When peace is out of reach, how little war can a mediator get away with?

Run: python3 demos/minimal_war.py
"""

# %%
import numpy as np

from crisis_bargaining import build_program, canonical_model, minimize_war_probability

np.set_printoptions(precision=3, suppress=True)

# %% c = 0.2 puts the strongest pair's demands at 1.1, so war must happen somewhere.
prog = build_program(canonical_model(0.2), 5, 5)
res = minimize_war_probability(prog)
print("rows:", prog.counts())
print(f"ex-ante war probability {res.objective:.6f} after {res.lp.iterations} pivots")
print("war probability by (theta1 row, theta2 column):")
print(res.pi)

# %% War is concentrated on strong types, and each side's war chance rises with its own type.
print("state 1 war propensity:", res.pi @ prog.mass2)

# %% Equilibrium utility must climb across types somewhere; the witness records where.
state, lo, hi, gap = res.rising_utility
print(f"state {state + 1}: utility rises by {gap:.4f} between types {lo} and {hi}")

# %% Compare with the plausible case, where the optimum is zero.
print("c=0.3:", minimize_war_probability(build_program(canonical_model(0.3), 5, 5)).objective)
