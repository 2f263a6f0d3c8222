"""Interim (type-conditional) payoffs: expectations over the opponent's type.

All functions accept a scalar or a 1-d array of own types and integrate
every entry in a single vector-valued quadrature.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .model import CrisisModel, OutOfRangeError, _other
from .quadrature import DEFAULT_TOL, integrate_over_opponent

__all__ = [
    "InterimProfile",
    "integrate_over_opponent",
    "interim_war_payoff",
    "interim_citizen_war_payoff",
    "interim_peace_payoffs",
    "interim_utility_truthful",
    "interim_utility_matrix",
    "interim_profile",
]


def _own_types(model: CrisisModel, i: int, theta_i) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta_i, dtype=float))
    if not model.support(i).contains(t):
        ts = model.support(i)
        raise OutOfRangeError(f"own type outside [{ts.lo}, {ts.hi}] for state {i}")
    return t


def _shape_like(theta_i, values):
    return float(values[0]) if np.ndim(theta_i) == 0 else values


def _opp_integral(model: CrisisModel, i: int, integrand, tol=DEFAULT_TOL, breakpoints=None):
    j = _other(i)
    return np.asarray(
        integrate_over_opponent(integrand, model.belief(j), tol=tol, breakpoints=breakpoints)
    )


def _audience_rule(model: CrisisModel, mech, i: int):
    override = getattr(mech, "audience_costs", None)
    if override is not None:
        return override[i]
    return model.state(i).audience_cost


def interim_war_payoff(model: CrisisModel, i: int, theta_i, tol: float = DEFAULT_TOL):
    """Expected leader war payoff of state ``i`` holding own type ``theta_i``."""
    t = _own_types(model, i, theta_i)
    vals = _opp_integral(model, i, lambda s: model.leader_payoff(i, t[None, :], s[:, None]), tol)
    return _shape_like(theta_i, vals)


def interim_citizen_war_payoff(model: CrisisModel, i: int, theta_i, tol: float = DEFAULT_TOL):
    t = _own_types(model, i, theta_i)
    vals = _opp_integral(model, i, lambda s: model.citizen_payoff(i, t[None, :], s[:, None]), tol)
    return _shape_like(theta_i, vals)


def interim_peace_payoffs(model: CrisisModel, mech, i: int, theta_i, tol: float = DEFAULT_TOL):
    """Return ``(V, X)``: leader peace payoff after audience costs, and raw share."""
    t = _own_types(model, i, theta_i)
    rule = _audience_rule(model, mech, i)

    def integrand(s):
        _, x = mech.evaluate(i, t, s)  # (T, m)
        v = rule.leader_payoff(x, t[:, None])
        return np.stack([v.T, x.T], axis=-1)

    vals = _opp_integral(model, i, integrand, tol, mech.grid(_other(i)))
    V, X = vals[:, 0], vals[:, 1]
    if np.ndim(theta_i) == 0:
        return float(V[0]), float(X[0])
    return V, X


def interim_utility_matrix(model: CrisisModel, mech, i: int, reports, true_types,
                           tol: float = DEFAULT_TOL) -> np.ndarray:
    """``U[k, r]``: interim utility of true type ``true_types[k]`` reporting ``reports[r]``.

    The war lottery is valued at the true type and the peace payoff at the
    reported profile.
    """
    r = _own_types(model, i, reports)
    t = _own_types(model, i, true_types)
    rule = _audience_rule(model, mech, i)

    def integrand(s):
        pi, x = mech.evaluate(i, r, s)  # (R, m)
        v = rule.leader_payoff(x, r[:, None])
        w = model.leader_payoff(i, t[:, None], s[None, :])  # (T, m)
        # result (m, T, R)
        war = pi.T[:, None, :] * w.T[:, :, None]
        peace = ((1.0 - pi) * v).T[:, None, :]
        return war + peace

    return _opp_integral(model, i, integrand, tol, mech.grid(_other(i)))


def interim_utility_truthful(model: CrisisModel, mech, i: int, theta_i, tol: float = DEFAULT_TOL):
    """``U_i(theta_i)``: interim leader utility under truthful reporting."""
    t = _own_types(model, i, theta_i)
    rule = _audience_rule(model, mech, i)

    def integrand(s):
        pi, x = mech.evaluate(i, t, s)
        v = rule.leader_payoff(x, t[:, None])
        w = model.leader_payoff(i, t[:, None], s[None, :])
        return (pi * w + (1.0 - pi) * v).T

    vals = _opp_integral(model, i, integrand, tol, mech.grid(_other(i)))
    return _shape_like(theta_i, vals)


def interim_utility_report(model: CrisisModel, mech, i: int, report, true_type,
                           tol: float = DEFAULT_TOL) -> float:
    """Interim utility of a type-``true_type`` leader who reports ``report``."""
    return float(interim_utility_matrix(model, mech, i, [report], [true_type], tol)[0, 0])


def interim_citizen_utility(model: CrisisModel, mech, i: int, theta_i, tol: float = DEFAULT_TOL):
    """Citizen expected utility ``E[pi w^c + (1 - pi) x]`` under truthful play."""
    t = _own_types(model, i, theta_i)

    def integrand(s):
        pi, x = mech.evaluate(i, t, s)
        wc = model.citizen_payoff(i, t[:, None], s[None, :])
        return (pi * wc + (1.0 - pi) * x).T

    vals = _opp_integral(model, i, integrand, tol, mech.grid(_other(i)))
    return _shape_like(theta_i, vals)


def interim_war_propensity(model: CrisisModel, mech, i: int, theta_i, tol: float = DEFAULT_TOL):
    """Expected war probability of own type ``theta_i`` over the opponent's type."""
    t = _own_types(model, i, theta_i)

    def integrand(s):
        pi, _ = mech.evaluate(i, t, s)
        return pi.T

    vals = _opp_integral(model, i, integrand, tol, mech.grid(_other(i)))
    return _shape_like(theta_i, vals)


@dataclass(frozen=True)
class InterimProfile:
    state: int
    theta_grid: np.ndarray
    W: np.ndarray
    Wc: np.ndarray
    V: np.ndarray
    X: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        n = len(self.theta_grid)
        for name in ("W", "Wc", "V", "X", "U"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, grid has {n}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["theta", "W", "Wc", "V", "X", "U"])
        for row in zip(self.theta_grid, self.W, self.Wc, self.V, self.X, self.U):
            out.writerow([f"{v:.12g}" for v in row])
        return buf.getvalue()


def interim_profile(model: CrisisModel, mech, i: int, tol: float = DEFAULT_TOL) -> InterimProfile:
    """Tabulate every interim quantity of state ``i`` on the mechanism's own grid."""
    grid = mech.grid(i)
    V, X = interim_peace_payoffs(model, mech, i, grid, tol)
    return InterimProfile(
        state=i,
        theta_grid=grid,
        W=interim_war_payoff(model, i, grid, tol),
        Wc=interim_citizen_war_payoff(model, i, grid, tol),
        V=V,
        X=X,
        U=interim_utility_truthful(model, mech, i, grid, tol),
    )
