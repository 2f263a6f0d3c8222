"""Peace plausibility, the constructive peaceful settlement, the war region
of near-strongest type pairs, and the monotone war-propensity diagnostic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mechanism import DirectMechanism, war_propensity
from .model import ZERO_AUDIENCE_COST, CrisisModel
from .payoffs import interim_citizen_war_payoff, interim_peace_payoffs, interim_war_payoff

PLAUSIBILITY_TOL = 1e-9
MONOTONE_SLACK = 1e-8


@dataclass(frozen=True)
class PlausibilityReport:
    lhs: float
    plausible: bool
    boundary: bool
    per_state: tuple  # ((gamma W(top), (1-gamma) W^c(top)), ...)
    leader_war_top: tuple
    citizen_war_top: tuple
    price_of_peace: Optional[tuple] = None
    tol: float = PLAUSIBILITY_TOL

    @property
    def verdict(self) -> str:
        if not self.plausible:
            return "implausible"
        return "plausible (boundary)" if self.boundary else "plausible"

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "plausible": self.plausible,
            "boundary": self.boundary,
            "verdict": self.verdict,
            "per_state": [list(p) for p in self.per_state],
            "leader_war_top": list(self.leader_war_top),
            "citizen_war_top": list(self.citizen_war_top),
            "price_of_peace": None if self.price_of_peace is None else list(self.price_of_peace),
            "tol": self.tol,
        }


def _top_payoffs(model: CrisisModel):
    W = tuple(interim_war_payoff(model, i, model.support(i).hi) for i in (0, 1))
    Wc = tuple(interim_citizen_war_payoff(model, i, model.support(i).hi) for i in (0, 1))
    return W, Wc


def peace_plausibility(model: CrisisModel, mechanism: Optional[DirectMechanism] = None,
                       tol: float = PLAUSIBILITY_TOL) -> PlausibilityReport:
    """Weighted budget test on the strongest types of both states.

    ``lhs = sum_i gamma_i W_i(top_i) + (1 - gamma_i) W^c_i(top_i)``; peace is
    plausible iff ``lhs <= 1`` (within ``tol``, so the boundary counts).
    Given a candidate peaceful mechanism, the price of appeasing each state,
    ``gamma_i V_i + (1 - gamma_i) X_i`` at its top type, is attached.
    """
    W, Wc = _top_payoffs(model)
    per_state = tuple(
        (model.state(i).gamma * W[i], (1.0 - model.state(i).gamma) * Wc[i]) for i in (0, 1)
    )
    lhs = float(sum(a + b for a, b in per_state))
    price = None
    if mechanism is not None:
        price = []
        for i in (0, 1):
            V, X = interim_peace_payoffs(model, mechanism, i, model.support(i).hi)
            g = model.state(i).gamma
            price.append(g * V + (1.0 - g) * X)
        price = tuple(price)
    return PlausibilityReport(
        lhs=lhs,
        plausible=lhs <= 1.0 + tol,
        boundary=abs(lhs - 1.0) <= tol,
        per_state=per_state,
        leader_war_top=W,
        citizen_war_top=Wc,
        price_of_peace=price,
        tol=tol,
    )


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Why no constant peaceful settlement satisfies both participation constraints."""

    report: PlausibilityReport
    demands: tuple
    demand_total: float

    @property
    def lhs(self) -> float:
        return self.report.lhs

    def to_dict(self) -> dict:
        return {
            "feasible": False,
            "demands": list(self.demands),
            "demand_total": self.demand_total,
            "plausibility": self.report.to_dict(),
        }


def construct_peaceful_settlement(model: CrisisModel, grid: int = 9, tol: float = PLAUSIBILITY_TOL):
    """Constant peaceful settlement, or an :class:`InfeasibilityCertificate`.

    Each state demands ``max(W_i(top), W^c_i(top))`` so leaders and citizens
    are both appeased; any leftover resource is split equally.  The
    mechanism is paired with zero audience costs.
    """
    report = peace_plausibility(model, tol=tol)
    demands = tuple(max(report.leader_war_top[i], report.citizen_war_top[i]) for i in (0, 1))
    total = float(sum(demands))
    if total > 1.0 + tol:
        return InfeasibilityCertificate(report, demands, total)
    surplus = max(0.0, 1.0 - total)
    x = (demands[0] + surplus / 2.0, demands[1] + surplus / 2.0)
    if x[0] + x[1] > 1.0:  # boundary case, within tol
        x = (x[0], 1.0 - x[0])
    g1, g2 = model.support(0).linspace(grid), model.support(1).linspace(grid)
    return DirectMechanism.from_functions(
        g1, g2, 0.0, x[0], x[1], audience_costs=(ZERO_AUDIENCE_COST, ZERO_AUDIENCE_COST)
    )


@dataclass(frozen=True, eq=False)
class WarRegionReport:
    grid1: np.ndarray
    grid2: np.ndarray
    indicator: np.ndarray
    mass: float
    demand1: np.ndarray
    demand2: np.ndarray

    def to_dict(self) -> dict:
        return {
            "grid": [len(self.grid1), len(self.grid2)],
            "mass": self.mass,
            "nonempty": bool(self.indicator.any()),
            "cells_at_war": int(self.indicator.sum()),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["theta1", "theta2", "indicator"])
        for k, t1 in enumerate(self.grid1):
            for l, t2 in enumerate(self.grid2):
                out.writerow([f"{t1:.12g}", f"{t2:.12g}", int(self.indicator[k, l])])
        return buf.getvalue()


def type_demand(model: CrisisModel, i: int, theta_i) -> np.ndarray:
    """``gamma_i W_i + (1 - gamma_i) W^c_i`` at each own type."""
    g = model.state(i).gamma
    return g * np.atleast_1d(interim_war_payoff(model, i, theta_i)) + (1 - g) * np.atleast_1d(
        interim_citizen_war_payoff(model, i, theta_i)
    )


def war_region(model: CrisisModel, grid: int = 256, tol: float = PLAUSIBILITY_TOL) -> WarRegionReport:
    """Type pairs whose weighted war demands exceed the resource, and their probability."""
    if grid < 16:
        raise ValueError("war_region needs at least 16 nodes per axis")
    g1, g2 = model.support(0).linspace(grid), model.support(1).linspace(grid)
    d1, d2 = type_demand(model, 0, g1), type_demand(model, 1, g2)
    ind = (d1[:, None] + d2[None, :]) > 1.0 + tol
    m1, m2 = model.belief(0).cell_masses(g1), model.belief(1).cell_masses(g2)
    mass = float(m1 @ ind.astype(float) @ m2)
    return WarRegionReport(g1, g2, ind, mass, d1, d2)


@dataclass(frozen=True)
class MonotonicityResult:
    ok: bool
    worst_drop: float
    state: int
    pair: tuple
    propensity: tuple

    def to_dict(self) -> dict:
        return {"ok": self.ok, "worst_drop": self.worst_drop, "state": self.state,
                "pair": list(self.pair), "propensity": [p.tolist() for p in self.propensity]}


def check_monotone_war_propensity(model: CrisisModel, mech: DirectMechanism,
                                  slack: float = MONOTONE_SLACK, weights=None) -> MonotonicityResult:
    """Is each state's interim war probability nondecreasing in its own type?

    Expectations use quadrature over the interpolated table, or, when
    ``weights = (w1, w2)`` are node masses, the discrete sums the grid
    solver works with.
    """
    if not model.war_tech.is_difference_form:
        raise ValueError("monotone war propensity needs a war payoff in difference form")
    mech.check_compatible(model)
    props = []
    worst = (np.inf, 0, (float(mech.grid1[0]), float(mech.grid1[0])))
    for i in (0, 1):
        if weights is None:
            p = war_propensity(model, mech, i)
        else:
            pi = mech.pi if i == 0 else mech.pi.T
            p = pi @ np.asarray(weights[1 - i], float)
        props.append(p)
        steps = np.diff(p)
        q = int(np.argmin(steps))
        if steps[q] < worst[0]:
            g = mech.grid(i)
            worst = (float(steps[q]), i, (float(g[q]), float(g[q + 1])))
    drop = min(worst[0], 0.0)
    return MonotonicityResult(drop >= -slack, drop, worst[1], worst[2], tuple(props))
