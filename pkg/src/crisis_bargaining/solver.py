"""Minimum-war-probability mechanisms on a type grid.

Types are discretized to ``n1 x n2`` nodes carrying midpoint-cell
probabilities.  The program's unknowns per node are the war probability
``pi`` and the expected peace shares ``y_i = (1 - pi) x_i``; in those
variables incentive compatibility, both participation constraints and the
budget are linear.  Audience costs are zero inside the program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mechanism import DirectMechanism, AuditReport, audit_mechanism
from .model import ZERO_AUDIENCE_COST, CrisisModel
from .simplex import LPError, LPResult, simplex

RISING_UTILITY_GAP = 1e-8


class SolverError(RuntimeError):
    pass


@dataclass(eq=False)
class GridProgram:
    model: CrisisModel
    grid1: np.ndarray
    grid2: np.ndarray
    mass1: np.ndarray
    mass2: np.ndarray
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    labels: list
    strict_balance: bool = False
    # node payoffs, [own, opp] per state
    leader_w: tuple = ()
    citizen_w: tuple = ()

    @property
    def shape(self):
        return len(self.grid1), len(self.grid2)

    @property
    def n_vars(self) -> int:
        return 3 * self.shape[0] * self.shape[1]

    def counts(self) -> dict:
        out: dict = {}
        for lab in self.labels:
            out[lab[0]] = out.get(lab[0], 0) + 1
        return out

    def unpack(self, z):
        n1, n2 = self.shape
        N = n1 * n2
        z = np.asarray(z, float)
        return z[:N].reshape(n1, n2), z[N:2 * N].reshape(n1, n2), z[2 * N:].reshape(n1, n2)

    def interim_war(self, i: int, citizen: bool = False) -> np.ndarray:
        w = (self.citizen_w if citizen else self.leader_w)[i]
        return w @ (self.mass2 if i == 0 else self.mass1)

    def utilities(self, pi, y, i: int) -> np.ndarray:
        """Discrete ``U[k, r]`` of state ``i`` true node ``k`` reporting node ``r``."""
        mass = self.mass2 if i == 0 else self.mass1
        P = pi if i == 0 else pi.T  # [report, opp]
        Y = y if i == 0 else y.T
        w = self.leader_w[i]  # [true, opp]
        return (w * mass) @ P.T + (Y @ mass)[None, :]

    def citizen_utilities(self, pi, y, i: int) -> np.ndarray:
        mass = self.mass2 if i == 0 else self.mass1
        P = pi if i == 0 else pi.T
        Y = y if i == 0 else y.T
        return ((P * self.citizen_w[i] + Y) @ mass)


def build_program(model: CrisisModel, n1: int, n2: int, strict_balance: bool = False) -> GridProgram:
    """Assemble the linear program over an ``n1 x n2`` grid.

    Rows: incentive compatibility between every ordered pair of distinct
    nodes of each state, leader and citizen participation at every node,
    and per node ``pi <= 1``, ``pi + y1 + y2 <= 1`` (an equality under
    ``strict_balance``) and ``-pi <= 0``.
    """
    if n1 < 2 or n2 < 2:
        raise ValueError("each axis needs at least 2 nodes")
    g = (model.support(0).linspace(n1), model.support(1).linspace(n2))
    mass = (model.belief(0).cell_masses(g[0]), model.belief(1).cell_masses(g[1]))
    N = n1 * n2
    PI, Y1, Y2 = 0, N, 2 * N

    def var(block, k, l):
        return block + k * n2 + l

    leader_w, citizen_w = [], []
    for i in (0, 1):
        own, opp = g[i], g[1 - i]
        leader_w.append(model.leader_payoff(i, own[:, None], opp[None, :]))
        citizen_w.append(model.citizen_payoff(i, own[:, None], opp[None, :]))

    rows, rhs, labels = [], [], []

    def node(i, own_k, opp_l):
        # table index of (own node, opponent node) for state i
        return (own_k, opp_l) if i == 0 else (opp_l, own_k)

    for i in (0, 1):
        n_own, n_opp = len(g[i]), len(g[1 - i])
        mo = mass[1 - i]
        yb = Y1 if i == 0 else Y2
        w, wc = leader_w[i], citizen_w[i]
        for k in range(n_own):
            for r in range(n_own):
                if r == k:
                    continue
                row = np.zeros(3 * N)
                for l in range(n_opp):
                    a, b = node(i, r, l)
                    row[var(PI, a, b)] += mo[l] * w[k, l]
                    row[var(yb, a, b)] += mo[l]
                    a, b = node(i, k, l)
                    row[var(PI, a, b)] -= mo[l] * w[k, l]
                    row[var(yb, a, b)] -= mo[l]
                rows.append(row)
                rhs.append(0.0)
                labels.append(("ic", i, k, r))
        for k in range(n_own):
            for kind, pay in (("leader_ir", w), ("citizen_ir", wc)):
                row = np.zeros(3 * N)
                for l in range(n_opp):
                    a, b = node(i, k, l)
                    row[var(PI, a, b)] -= mo[l] * pay[k, l]
                    row[var(yb, a, b)] -= mo[l]
                rows.append(row)
                rhs.append(-float(pay[k] @ mo))
                labels.append((kind, i, k))

    eq_rows, eq_rhs = [], []
    for k in range(n1):
        for l in range(n2):
            row = np.zeros(3 * N)
            row[var(PI, k, l)] = 1.0
            rows.append(row)
            rhs.append(1.0)
            labels.append(("bound", "war_upper", k, l))
            row = np.zeros(3 * N)
            row[[var(PI, k, l), var(Y1, k, l), var(Y2, k, l)]] = 1.0
            if strict_balance:
                eq_rows.append(row)
                eq_rhs.append(1.0)
            else:
                rows.append(row)
                rhs.append(1.0)
            labels.append(("bound", "budget", k, l))
            row = np.zeros(3 * N)
            row[var(PI, k, l)] = -1.0
            rows.append(row)
            rhs.append(0.0)
            labels.append(("bound", "war_lower", k, l))

    cost = np.zeros(3 * N)
    cost[:N] = np.outer(mass[0], mass[1]).ravel()
    return GridProgram(
        model=model, grid1=g[0], grid2=g[1], mass1=mass[0], mass2=mass[1], c=cost,
        A_ub=np.array(rows), b_ub=np.array(rhs),
        A_eq=np.array(eq_rows).reshape(-1, 3 * N), b_eq=np.array(eq_rhs),
        labels=labels, strict_balance=strict_balance,
        leader_w=tuple(leader_w), citizen_w=tuple(citizen_w),
    )


@dataclass(eq=False)
class SolveResult:
    mechanism: DirectMechanism
    objective: float
    lp: LPResult
    pi: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    node_ic_gain: float
    node_utilities: tuple
    rising_utility: Optional[tuple] = None
    audit: Optional[AuditReport] = None
    extra: dict = field(default_factory=dict)

    def log(self) -> dict:
        d = {
            "objective": self.objective,
            "iterations": self.lp.iterations,
            "grid": list(self.mechanism.shape),
            "node_ic_gain": self.node_ic_gain,
            "rising_utility_witness": None if self.rising_utility is None else {
                "state": self.rising_utility[0], "low": self.rising_utility[1],
                "high": self.rising_utility[2], "gap": self.rising_utility[3],
            },
        }
        if self.audit is not None:
            d["audit"] = {
                "ic_max_gain": self.audit.ic.max_gain,
                "envelope_max_residual": self.audit.envelope.max_residual,
                "leader_ir_worst": self.audit.participation.leader_worst,
                "citizen_ir_worst": self.audit.participation.citizen_worst,
                "feasible": self.audit.feasibility.feasible,
                "peaceful": self.audit.feasibility.peaceful,
            }
        return d


def node_ic_gain(program: GridProgram, pi, y1, y2) -> float:
    """Largest gain from misreporting among grid nodes, discrete expectations."""
    best = 0.0
    for i, y in ((0, y1), (1, y2)):
        U = program.utilities(pi, y, i)
        best = max(best, float((U - np.diag(U)[:, None]).max()))
    return best


def rising_utility_witness(program: GridProgram, pi, y1, y2, gap: float = RISING_UTILITY_GAP):
    """A state and node pair ``low < high`` with ``U(high) > U(low) + gap``, if any."""
    best = None
    for i, y in ((0, y1), (1, y2)):
        u = np.diag(program.utilities(pi, y, i))
        lo = np.minimum.accumulate(u)
        k_hi = int(np.argmax(u - lo))
        diff = float(u[k_hi] - lo[k_hi])
        if diff > gap and (best is None or diff > best[3]):
            k_lo = int(np.argmin(u[:k_hi + 1]))
            g = program.grid1 if i == 0 else program.grid2
            best = (i, float(g[k_lo]), float(g[k_hi]), diff)
    return best


def minimize_war_probability(program: GridProgram, audit: bool = True, tol: float = 1e-9) -> SolveResult:
    """Solve the grid program by dense Bland simplex and rebuild the mechanism.

    Settlement shares are recovered as ``x_i = y_i / (1 - pi)``; nodes where
    war is certain get ``x = 0``.  With ``audit`` the mechanism is re-audited
    on the continuum (4x-refined deviations, zero audience costs).
    """
    try:
        lp = simplex(program.c, program.A_ub, program.b_ub, program.A_eq, program.b_eq, tol=tol)
    except LPError as exc:
        raise SolverError(str(exc)) from exc
    pi, y1, y2 = program.unpack(lp.x)
    pi = np.clip(pi, 0.0, 1.0)
    peace = 1.0 - pi
    safe = peace > 1e-12
    x1 = np.where(safe, y1 / np.where(safe, peace, 1.0), 0.0)
    x2 = np.where(safe, y2 / np.where(safe, peace, 1.0), 0.0)
    total = np.maximum(x1 + x2, 1.0)  # > 1 only through rounding
    x1, x2 = x1 / total, x2 / total
    mech = DirectMechanism(program.grid1, program.grid2, pi, x1, x2,
                           audience_costs=(ZERO_AUDIENCE_COST, ZERO_AUDIENCE_COST))
    objective = float(program.c[: pi.size] @ pi.ravel())
    result = SolveResult(
        mechanism=mech,
        objective=objective,
        lp=lp,
        pi=pi, y1=y1, y2=y2,
        node_ic_gain=node_ic_gain(program, pi, y1, y2),
        node_utilities=tuple(np.diag(program.utilities(pi, y, i)) for i, y in ((0, y1), (1, y2))),
        rising_utility=rising_utility_witness(program, pi, y1, y2),
    )
    if audit:
        result.audit = audit_mechanism(program.model, mech)
    return result
