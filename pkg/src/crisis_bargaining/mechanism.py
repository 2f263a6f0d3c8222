"""Direct mechanisms and their audits.

A mechanism is a table of war probabilities and settlement shares on a
regular product grid of reported types, read between nodes by bilinear
interpolation.  The audits check incentive compatibility two ways (a
brute-force deviation scan and the envelope characterization), interim
participation of leaders and citizens, budget feasibility and peace.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .model import AudienceCostRule, CrisisModel, _other
from .payoffs import (
    interim_citizen_utility,
    interim_citizen_war_payoff,
    interim_peace_payoffs,
    interim_utility_matrix,
    interim_utility_truthful,
    interim_war_payoff,
    interim_war_propensity,
)
from .quadrature import DEFAULT_TOL, integrate_over_opponent

IC_TOL = 1e-6
ENVELOPE_TOL = 1e-4
IR_TOL = 1e-8
FEASIBILITY_TOL = 1e-9
REFINE = 4
TIE_EPS = 1e-13  # gains this small are rounding noise, i.e. ties


class GridMismatchError(ValueError):
    """Mechanism grid does not span the model's type spaces."""


class PreconditionError(ValueError):
    pass


def _regular(grid, name: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or len(g) < 2:
        raise ValueError(f"{name} needs at least 2 nodes")
    step = np.diff(g)
    if np.any(step <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if not np.allclose(step, step[0], rtol=1e-9, atol=1e-12):
        raise ValueError(f"{name} must be uniformly spaced")
    return g


def _locate(grid: np.ndarray, t: np.ndarray):
    """Cell index and fractional position of ``t`` on a regular grid."""
    n = len(grid)
    pos = (t - grid[0]) / (grid[-1] - grid[0]) * (n - 1)
    pos = np.clip(pos, 0.0, n - 1)
    k = np.minimum(np.floor(pos).astype(int), n - 2)
    return k, pos - k


def refine_grid(grid, factor: int) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    return np.linspace(grid[0], grid[-1], (len(grid) - 1) * factor + 1)


@dataclass(frozen=True, eq=False)
class DirectMechanism:
    """Tabulated menu: ``pi[k, l]``, ``x1[k, l]``, ``x2[k, l]`` at
    ``(grid1[k], grid2[l])``.

    ``audience_costs`` optionally pins the pair of audience-cost rules the
    mechanism is designed for; when set it overrides the model's rules in
    every payoff computation.
    """

    grid1: np.ndarray
    grid2: np.ndarray
    pi: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    audience_costs: Optional[tuple] = None

    def __post_init__(self):
        g1 = _regular(self.grid1, "grid1")
        g2 = _regular(self.grid2, "grid2")
        object.__setattr__(self, "grid1", g1)
        object.__setattr__(self, "grid2", g2)
        for name in ("pi", "x1", "x2"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (len(g1), len(g2)):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(len(g1), len(g2))}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_functions(cls, grid1, grid2, pi, x1, x2, audience_costs=None):
        """Tabulate callables (or constants) of ``(theta1, theta2)`` on a grid."""
        g1, g2 = np.asarray(grid1, float), np.asarray(grid2, float)
        T1, T2 = np.meshgrid(g1, g2, indexing="ij")

        def tab(f):
            if callable(f):
                return np.broadcast_to(np.asarray(f(T1, T2), dtype=float), T1.shape)
            return np.full(T1.shape, float(f))

        return cls(g1, g2, tab(pi), tab(x1), tab(x2), audience_costs)

    @classmethod
    def constant(cls, model: CrisisModel, x, war: float = 0.0, n: int = 2):
        return cls.from_functions(
            model.support(0).linspace(n), model.support(1).linspace(n), war, x[0], x[1]
        )

    @property
    def shape(self):
        return self.pi.shape

    def grid(self, i: int) -> np.ndarray:
        return self.grid1 if i == 0 else self.grid2

    def table(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def at(self, theta1, theta2):
        """Bilinear read of ``(pi, x1, x2)`` at arbitrary broadcastable points."""
        t1, t2 = np.broadcast_arrays(np.asarray(theta1, float), np.asarray(theta2, float))
        k, a = _locate(self.grid1, t1)
        l, b = _locate(self.grid2, t2)

        def interp(T):
            return ((1 - a) * (1 - b) * T[k, l] + a * (1 - b) * T[k + 1, l]
                    + (1 - a) * b * T[k, l + 1] + a * b * T[k + 1, l + 1])

        return interp(self.pi), interp(self.x1), interp(self.x2)

    def evaluate(self, i: int, own, opp):
        """``(pi, x_i)`` on the outer grid ``own x opp``, shape ``(len(own), len(opp))``."""
        own = np.atleast_1d(np.asarray(own, float))
        opp = np.atleast_1d(np.asarray(opp, float))
        if i == 0:
            pi, x1, _ = self.at(own[:, None], opp[None, :])
            return pi, x1
        pi, _, x2 = self.at(opp[None, :], own[:, None])
        return pi, x2

    def check_compatible(self, model: CrisisModel, tol: float = 1e-9):
        for i in (0, 1):
            g, ts = self.grid(i), model.support(i)
            scale = max(1.0, abs(ts.lo), abs(ts.hi))
            if abs(g[0] - ts.lo) > tol * scale or abs(g[-1] - ts.hi) > tol * scale:
                raise GridMismatchError(
                    f"grid{i + 1} spans [{g[0]}, {g[-1]}] but state {i} types span [{ts.lo}, {ts.hi}]"
                )

    def to_dict(self) -> dict:
        d = {
            "grid1": self.grid1.tolist(),
            "grid2": self.grid2.tolist(),
            "pi": self.pi.tolist(),
            "x1": self.x1.tolist(),
            "x2": self.x2.tolist(),
        }
        if self.audience_costs is not None:
            d["audience_cost"] = [r.to_dict() for r in self.audience_costs]
        return d

    @classmethod
    def from_dict(cls, d) -> "DirectMechanism":
        try:
            g1 = np.asarray(d["grid1"], float)
            g2 = np.asarray(d["grid2"], float)
            tables = [np.asarray(d[k], float).reshape(len(g1), len(g2)) for k in ("pi", "x1", "x2")]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed mechanism: {exc}") from exc
        rules = None
        if d.get("audience_cost") is not None:
            rules = tuple(
                AudienceCostRule(str(r.get("kind", "zero")), dict(r.get("params", {})))
                for r in d["audience_cost"]
            )
        return cls(g1, g2, *tables, audience_costs=rules)


# --------------------------------------------------------------------------
# Audit results


@dataclass
class ICResult:
    max_gain: float
    state: int
    true_type: float
    report: float
    deviation_grid_size: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_gain <= self.tol


@dataclass
class EnvelopeResult:
    max_residual: float
    residual_state: int
    residual_type: float
    monotone: bool
    worst_drop: float
    drop_state: int
    drop_pair: tuple
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and self.monotone


@dataclass
class ParticipationResult:
    leader_worst: float
    leader_state: int
    leader_type: float
    leader_peace_worst: float  # V - W, the printed leader constraint
    citizen_worst: float
    citizen_state: int
    citizen_type: float
    citizen_peace_worst: float  # X - W^c, the printed citizen constraint
    leader_rule: str
    citizen_vacuous: bool
    tol: float

    @property
    def leader_ok(self) -> bool:
        return self.leader_worst >= -self.tol

    @property
    def citizen_ok(self) -> bool:
        return self.citizen_vacuous or self.citizen_worst >= -self.tol

    @property
    def passed(self) -> bool:
        return self.leader_ok and self.citizen_ok


@dataclass
class FeasibilityResult:
    feasible: bool
    peaceful: bool
    max_war: float
    worst_violation: float
    violation_node: Optional[tuple]
    tol: float


@dataclass
class AuditReport:
    ic: ICResult
    envelope: EnvelopeResult
    participation: ParticipationResult
    feasibility: FeasibilityResult
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (self.ic.passed and self.envelope.passed
                and self.participation.passed and self.feasibility.feasible)

    def to_dict(self) -> dict:
        d = {
            "passed": self.passed,
            "ic": {**asdict(self.ic), "passed": self.ic.passed},
            "envelope": {**asdict(self.envelope), "passed": self.envelope.passed},
            "participation": {
                **asdict(self.participation),
                "leader_ok": self.participation.leader_ok,
                "citizen_ok": self.participation.citizen_ok,
                "passed": self.participation.passed,
            },
            "feasibility": asdict(self.feasibility),
            "tolerances": dict(self.tolerances),
        }
        return _plain(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --------------------------------------------------------------------------
# Audits


def check_incentive_compatibility(model: CrisisModel, mech: DirectMechanism,
                                  deviation_grid_size: Optional[int] = None,
                                  tol: float = IC_TOL, quad_tol: float = DEFAULT_TOL) -> ICResult:
    """Brute-force deviation scan.

    Every true type on the mechanism grid is tried against every report on
    a regular deviation grid (default: the mechanism grid refined 4x).  The
    largest gain over truthful reporting is returned with its witness; ties
    keep the truthful report.
    """
    mech.check_compatible(model)
    candidates, sizes = [], []
    for i in (0, 1):
        grid = mech.grid(i)
        n = len(grid)
        m = deviation_grid_size if deviation_grid_size is not None else (n - 1) * REFINE + 1
        if m < n:
            raise ValueError(f"deviation grid ({m}) must be at least the mechanism grid ({n})")
        # the true nodes stay among the reports
        reports = np.unique(np.concatenate([np.linspace(grid[0], grid[-1], m), grid]))
        sizes.append(len(reports))
        U = interim_utility_matrix(model, mech, i, reports, grid, quad_tol)
        truth = np.searchsorted(reports, grid)
        gain = U - U[np.arange(n), truth][:, None]
        gain[np.arange(n), truth] = 0.0
        gain[np.abs(gain) <= TIE_EPS] = 0.0
        k, r = np.unravel_index(np.argmax(gain), gain.shape)
        if gain[k, r] > 0.0:
            candidates.append((float(gain[k, r]), i, float(grid[k]), float(reports[r])))
        else:
            candidates.append((0.0, i, float(grid[0]), float(grid[0])))
    g, i, t, r = max(candidates, key=lambda c: c[0])
    return ICResult(g, i, t, r, max(sizes), tol)


def marginal_war_value(model: CrisisModel, mech: DirectMechanism, i: int, t,
                       tol: float = DEFAULT_TOL) -> np.ndarray:
    """``E_j[pi(t, theta_j) * dw_i/dt(t, theta_j)]`` at each own type in ``t``."""
    t = np.atleast_1d(np.asarray(t, float))
    j = _other(i)

    def integrand(s):
        pi, _ = mech.evaluate(i, t, s)
        dw = model.leader_payoff_slope(i, t[:, None], s[None, :])
        return (pi * dw).T

    return np.atleast_1d(
        integrate_over_opponent(integrand, model.belief(j), tol=tol, breakpoints=mech.grid(j))
    )


def check_envelope_condition(model: CrisisModel, mech: DirectMechanism,
                             tol: float = ENVELOPE_TOL, refine: int = 8,
                             quad_tol: float = DEFAULT_TOL) -> EnvelopeResult:
    """Envelope-integral residual and monotone-marginal check for both states.

    The marginal value of war is accumulated by the trapezoid rule on the
    own grid refined ``refine`` times; the residual
    ``|U(t) - U(lo) - integral|`` is measured at the mechanism's nodes.
    Between nodes bilinear tables bend the interim utility away from the
    envelope by O(h^2); that curvature is not a deviation gain and is
    left to the brute-force scan.
    """
    mech.check_compatible(model)
    worst = (0.0, 0, float(mech.grid1[0]))
    drop = (0.0, 0, (float(mech.grid1[0]), float(mech.grid1[0])))
    monotone = True
    for i in (0, 1):
        grid = mech.grid(i)
        fine = refine_grid(grid, refine)
        marg = marginal_war_value(model, mech, i, fine, quad_tol)
        acc = cumulative_trapezoid(marg, fine, initial=0.0)
        U = np.atleast_1d(interim_utility_truthful(model, mech, i, grid, quad_tol))
        resid = np.abs(U - U[0] - acc[::refine])
        k = int(np.argmax(resid))
        if resid[k] > worst[0]:
            worst = (float(resid[k]), i, float(grid[k]))
        node_marg = marg[::refine]
        steps = np.diff(node_marg)
        if len(steps):
            q = int(np.argmin(steps))
            if steps[q] < -tol:
                monotone = False
            if steps[q] < drop[0]:
                drop = (float(steps[q]), i, (float(grid[q]), float(grid[q + 1])))
    return EnvelopeResult(worst[0], worst[1], worst[2], monotone, drop[0], drop[1], drop[2], tol)


def check_participation(model: CrisisModel, mech: DirectMechanism, tol: float = IR_TOL,
                        peace_tol: float = FEASIBILITY_TOL,
                        quad_tol: float = DEFAULT_TOL) -> ParticipationResult:
    """Interim participation of leaders and citizens on the mechanism grid.

    For a peaceful mechanism the leader constraint is ``V >= W`` and the
    citizen constraint ``X >= W^c``.  Otherwise the operative constraints
    compare expected utility under the mechanism, war lottery included,
    with the war payoff; the peace-only slacks are still reported.  When
    war is certain at every node the citizen constraint is vacuous.
    """
    mech.check_compatible(model)
    peaceful = float(mech.pi.max()) <= peace_tol
    all_war = float(mech.pi.min()) >= 1.0 - peace_tol
    lead, lead_peace, cit, cit_peace = [], [], [], []
    for i in (0, 1):
        grid = mech.grid(i)
        W = interim_war_payoff(model, i, grid, quad_tol)
        Wc = interim_citizen_war_payoff(model, i, grid, quad_tol)
        V, X = interim_peace_payoffs(model, mech, i, grid, quad_tol)
        if peaceful:
            U, Uc = V, X
        else:
            U = interim_utility_truthful(model, mech, i, grid, quad_tol)
            Uc = interim_citizen_utility(model, mech, i, grid, quad_tol)
        for store, slack in ((lead, U - W), (lead_peace, V - W), (cit, Uc - Wc), (cit_peace, X - Wc)):
            k = int(np.argmin(slack))
            store.append((float(slack[k]), i, float(grid[k])))
    lw, cw = min(lead), min(cit)
    return ParticipationResult(
        leader_worst=lw[0], leader_state=lw[1], leader_type=lw[2],
        leader_peace_worst=min(lead_peace)[0],
        citizen_worst=cw[0], citizen_state=cw[1], citizen_type=cw[2],
        citizen_peace_worst=min(cit_peace)[0],
        leader_rule="V >= W" if peaceful else "U >= W",
        citizen_vacuous=all_war,
        tol=tol,
    )


def check_feasibility_and_peace(mech: DirectMechanism, tol: float = FEASIBILITY_TOL) -> FeasibilityResult:
    """Simplex and war-probability bounds at every node; peace means max node ``pi <= tol``."""
    viol = np.stack([
        -mech.pi, mech.pi - 1.0, -mech.x1, -mech.x2, mech.x1 + mech.x2 - 1.0,
    ]).max(axis=0)
    k, l = np.unravel_index(np.argmax(viol), viol.shape)
    worst = float(viol[k, l])
    feasible = worst <= tol
    node = None if feasible else (float(mech.grid1[k]), float(mech.grid2[l]))
    max_war = float(mech.pi.max())
    return FeasibilityResult(feasible, max_war <= tol, max_war, max(worst, 0.0), node, tol)


def audit_mechanism(model: CrisisModel, mech: DirectMechanism, ic_tol: float = IC_TOL,
                    envelope_tol: float = ENVELOPE_TOL, ir_tol: float = IR_TOL,
                    feasibility_tol: float = FEASIBILITY_TOL,
                    deviation_grid_size: Optional[int] = None) -> AuditReport:
    mech.check_compatible(model)
    return AuditReport(
        ic=check_incentive_compatibility(model, mech, deviation_grid_size, ic_tol),
        envelope=check_envelope_condition(model, mech, envelope_tol),
        participation=check_participation(model, mech, ir_tol, feasibility_tol),
        feasibility=check_feasibility_and_peace(mech, feasibility_tol),
        tolerances={"ic": ic_tol, "envelope": envelope_tol, "ir": ir_tol,
                    "feasibility": feasibility_tol, "quadrature": DEFAULT_TOL},
    )


def check_constant_peace_payoff(model: CrisisModel, mech: DirectMechanism,
                                tol: float = IC_TOL) -> tuple[bool, tuple]:
    """Spread of the leader peace payoff across types, per state.

    Only meaningful for peaceful, incentive-compatible mechanisms; both are
    audited first and a :class:`PreconditionError` is raised otherwise.
    """
    feas = check_feasibility_and_peace(mech)
    if not feas.peaceful:
        raise PreconditionError(f"mechanism is not peaceful (max war probability {feas.max_war:.3g})")
    ic = check_incentive_compatibility(model, mech, tol=tol)
    if not ic.passed:
        raise PreconditionError(
            f"mechanism is not incentive compatible (gain {ic.max_gain:.3g} for state {ic.state})"
        )
    spreads = []
    for i in (0, 1):
        V, _ = interim_peace_payoffs(model, mech, i, mech.grid(i))
        spreads.append(float(np.max(V) - np.min(V)))
    return all(s <= tol for s in spreads), tuple(spreads)


def war_propensity(model: CrisisModel, mech: DirectMechanism, i: int) -> np.ndarray:
    return np.atleast_1d(interim_war_propensity(model, mech, i, mech.grid(i)))
