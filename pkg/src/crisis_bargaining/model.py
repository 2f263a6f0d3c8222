"""Crisis-bargaining primitives: type spaces, beliefs, war technologies,
political bias and audience-cost rules.

Everything here is immutable once validated.  Evaluators broadcast over
numpy arrays so the quadrature and audit layers can call them on whole
grids at once.  State indices are 0 and 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import stats

PROBE_POINTS = 64
FD_STEP = 1e-5


class ModelValidationError(ValueError):
    """Raised with one diagnostic per offending field."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class OutOfRangeError(ValueError):
    pass


def _other(i: int) -> int:
    if i not in (0, 1):
        raise IndexError(f"state index must be 0 or 1, got {i!r}")
    return 1 - i


@dataclass(frozen=True)
class TypeSpace:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, t, slack: float = 1e-12) -> bool:
        t = np.asarray(t, dtype=float)
        pad = slack * max(1.0, abs(self.lo), abs(self.hi))
        return bool(np.all((t >= self.lo - pad) & (t <= self.hi + pad)))

    def linspace(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)


# --------------------------------------------------------------------------
# Beliefs


@dataclass(frozen=True)
class BeliefDistribution:
    """A continuous belief over a :class:`TypeSpace`.

    ``kind`` is one of ``"uniform"``, ``"beta"`` (params ``a``, ``b``) or
    ``"truncated-normal"`` (params ``mu``, ``sigma``).  The beta family is
    rescaled from [0, 1] onto the support.
    """

    kind: str
    support: TypeSpace
    params: Mapping[str, float] = field(default_factory=dict)

    KINDS = ("uniform", "beta", "truncated-normal")

    @cached_property
    def _rv(self):
        lo, width = self.support.lo, self.support.width
        if self.kind == "uniform":
            return stats.uniform(loc=lo, scale=width)
        if self.kind == "beta":
            return stats.beta(self.params["a"], self.params["b"], loc=lo, scale=width)
        if self.kind == "truncated-normal":
            mu, sigma = self.params["mu"], self.params["sigma"]
            a = (self.support.lo - mu) / sigma
            b = (self.support.hi - mu) / sigma
            return stats.truncnorm(a, b, loc=mu, scale=sigma)
        raise ValueError(f"unknown distribution kind {self.kind!r}")

    def cdf(self, t):
        return np.clip(self._rv.cdf(t), 0.0, 1.0)

    def pdf(self, t):
        return self._rv.pdf(t)

    def ppf(self, u):
        out = self._rv.ppf(u)
        return np.clip(out, self.support.lo, self.support.hi)

    @property
    def has_ppf(self) -> bool:
        return True

    def cell_masses(self, grid) -> np.ndarray:
        """Probability of the midpoint cell around each grid node; sums to 1."""
        g = np.asarray(grid, dtype=float)
        edges = np.concatenate([[self.support.lo], 0.5 * (g[1:] + g[:-1]), [self.support.hi]])
        c = self.cdf(edges)
        c[0], c[-1] = 0.0, 1.0
        return np.diff(c)

    def mean(self) -> float:
        return float(self._rv.mean())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


def uniform(lo: float = 0.0, hi: float = 1.0) -> BeliefDistribution:
    return BeliefDistribution("uniform", TypeSpace(lo, hi))


# --------------------------------------------------------------------------
# One-dimensional component functions used by the two-sided technology


class Component:
    """Scalar function of one type with a derivative."""

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return (self(t + FD_STEP) - self(t - FD_STEP)) / (2 * FD_STEP)

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")


@dataclass(frozen=True)
class Linear(Component):
    slope: float
    intercept: float = 0.0

    def __call__(self, t):
        return self.slope * np.asarray(t, dtype=float) + self.intercept

    def derivative(self, t):
        return np.full(np.shape(t), float(self.slope))

    def to_dict(self) -> dict:
        return {"kind": "linear", "slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class Tabulated(Component):
    """Piecewise-linear function through ``(x, y)``; constant beyond the ends."""

    x: tuple
    y: tuple

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.x, self.y)

    def to_dict(self) -> dict:
        return {"kind": "tabulated", "x": list(self.x), "y": list(self.y)}


@dataclass(frozen=True)
class FunctionComponent(Component):
    """Wraps an arbitrary vectorized callable (Python API only)."""

    fn: Callable
    dfn: Callable | None = None

    def __call__(self, t):
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)

    def derivative(self, t):
        if self.dfn is None:
            return super().derivative(t)
        return np.asarray(self.dfn(np.asarray(t, dtype=float)), dtype=float)


def component_from_dict(spec) -> Component:
    if isinstance(spec, (int, float)):
        return Linear(float(spec))
    kind = spec.get("kind", "linear")
    if kind == "linear":
        return Linear(float(spec["slope"]), float(spec.get("intercept", 0.0)))
    if kind == "tabulated":
        x = tuple(float(v) for v in spec["x"])
        y = tuple(float(v) for v in spec["y"])
        if len(x) != len(y) or len(x) < 2 or any(b <= a for a, b in zip(x, x[1:])):
            raise ValueError("tabulated component needs >= 2 strictly increasing x nodes matching y")
        return Tabulated(x, y)
    raise ValueError(f"unknown component kind {kind!r}")


# --------------------------------------------------------------------------
# War technologies


@dataclass(frozen=True)
class WarTechnology:
    """How types map into winning probabilities and war costs.

    ``one-sided-cost``: winning probabilities ``p`` are fixed and a state's
    type is minus its war cost, so ``c_i = -theta_i``.

    ``two-sided-difference``: ``p_i = h_i(theta_i) - g_i(theta_j) + base_i``
    with constant citizen war costs ``costs``.
    """

    kind: str
    p: tuple = (0.5, 0.5)
    h: tuple = ()
    g: tuple = ()
    base: tuple = (0.0, 0.0)
    costs: tuple = (0.0, 0.0)

    KINDS = ("one-sided-cost", "two-sided-difference")

    @classmethod
    def one_sided(cls, p=(0.5, 0.5)) -> "WarTechnology":
        return cls("one-sided-cost", p=tuple(float(v) for v in p))

    @classmethod
    def two_sided(cls, h, g, base, costs) -> "WarTechnology":
        return cls(
            "two-sided-difference",
            h=tuple(h),
            g=tuple(g),
            base=tuple(float(v) for v in base),
            costs=tuple(float(v) for v in costs),
        )

    @classmethod
    def linear_difference(cls, slope=0.5, base=0.5, costs=(0.2, 0.2)) -> "WarTechnology":
        """``p_1 = base + slope * (theta_1 - theta_2)``, symmetric for state 2."""
        comp = Linear(slope)
        return cls.two_sided((comp, comp), (comp, comp), (base, 1.0 - base), costs)

    @property
    def is_difference_form(self) -> bool:
        # one-sided: w_i = p_i + lambda_i * theta_i, i.e. g == 0
        return self.kind in self.KINDS

    def win_prob(self, i: int, own, opp):
        own = np.asarray(own, dtype=float)
        opp = np.asarray(opp, dtype=float)
        if self.kind == "one-sided-cost":
            return np.broadcast_to(self.p[i], np.broadcast(own, opp).shape).astype(float)
        return self.h[i](own) - self.g[i](opp) + self.base[i]

    def cost(self, i: int, own):
        """Citizen war cost of state ``i`` given its own type."""
        own = np.asarray(own, dtype=float)
        if self.kind == "one-sided-cost":
            return -own
        return np.full(own.shape, self.costs[i])

    def to_dict(self) -> dict:
        if self.kind == "one-sided-cost":
            return {"kind": self.kind, "params": {"p": list(self.p)}}
        return {
            "kind": self.kind,
            "params": {
                "h": [c.to_dict() for c in self.h],
                "g": [c.to_dict() for c in self.g],
                "base": list(self.base),
                "costs": list(self.costs),
            },
        }


# --------------------------------------------------------------------------
# Audience costs


@dataclass(frozen=True)
class AudienceCostRule:
    """Maps a settlement share and own type to the leader's peace payoff.

    The rule stores the audience cost ``a``; the leader receives
    ``v = x - a``.  Families: ``zero``; ``affine`` with
    ``a = slope * x + intercept + type_slope * theta``; ``tabulated`` with
    ``a`` piecewise linear in ``x`` through nodes ``(x, a)``.
    """

    kind: str = "zero"
    params: Mapping[str, Any] = field(default_factory=dict)

    KINDS = ("zero", "affine", "tabulated")

    def cost(self, x, theta):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros(np.broadcast(x, theta).shape)
        if self.kind == "affine":
            p = self.params
            return (
                p.get("slope", 0.0) * x
                + p.get("intercept", 0.0)
                + p.get("type_slope", 0.0) * np.asarray(theta, dtype=float)
            )
        if self.kind == "tabulated":
            out = np.interp(x, self.params["x"], self.params["a"])
            return np.broadcast_to(out, np.broadcast(x, theta).shape)
        raise ValueError(f"unknown audience-cost kind {self.kind!r}")

    def leader_payoff(self, x, theta):
        return np.asarray(x, dtype=float) - self.cost(x, theta)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


ZERO_AUDIENCE_COST = AudienceCostRule()


# --------------------------------------------------------------------------
# The model


@dataclass(frozen=True)
class State:
    type_space: TypeSpace
    belief: BeliefDistribution
    gamma: float = 1.0
    bias: float = 1.0  # political bias lambda
    audience_cost: AudienceCostRule = ZERO_AUDIENCE_COST

    def to_dict(self) -> dict:
        return {
            "type_space": {"lo": self.type_space.lo, "hi": self.type_space.hi},
            "distribution": self.belief.to_dict(),
            "gamma": self.gamma,
            "lambda": self.bias,
            "audience_cost": self.audience_cost.to_dict(),
        }


@dataclass(frozen=True)
class CrisisModel:
    states: tuple
    war_tech: WarTechnology
    resource: float = 1.0

    def state(self, i: int) -> State:
        _other(i)
        return self.states[i]

    def support(self, i: int) -> TypeSpace:
        return self.states[i].type_space

    def belief(self, i: int) -> BeliefDistribution:
        return self.states[i].belief

    # -- ex-post payoffs, own/opponent ordering ---------------------------

    def leader_payoff(self, i: int, own, opp):
        lam = self.states[i].bias
        return self.war_tech.win_prob(i, own, opp) - lam * self.war_tech.cost(i, own)

    def citizen_payoff(self, i: int, own, opp):
        return self.war_tech.win_prob(i, own, opp) - self.war_tech.cost(i, own)

    def leader_payoff_slope(self, i: int, own, opp):
        """Partial derivative of the leader war payoff in the own type."""
        shape = np.broadcast(np.asarray(own), np.asarray(opp)).shape
        if self.war_tech.kind == "one-sided-cost":
            return np.full(shape, float(self.states[i].bias))
        return np.broadcast_to(self.war_tech.h[i].derivative(own), shape)

    def replace_state(self, i: int, **changes) -> "CrisisModel":
        from dataclasses import replace

        states = list(self.states)
        states[i] = replace(states[i], **changes)
        return replace(self, states=tuple(states))

    def with_zero_audience_cost(self) -> "CrisisModel":
        m = self.replace_state(0, audience_cost=ZERO_AUDIENCE_COST)
        return m.replace_state(1, audience_cost=ZERO_AUDIENCE_COST)

    def to_dict(self) -> dict:
        return {
            "states": [s.to_dict() for s in self.states],
            "war_technology": self.war_tech.to_dict(),
        }


def _type_pair(model: CrisisModel, theta) -> tuple[float, float]:
    t1, t2 = (float(v) for v in theta)
    for i, t in enumerate((t1, t2)):
        if not model.support(i).contains(t):
            ts = model.support(i)
            raise OutOfRangeError(f"theta[{i}]={t} outside [{ts.lo}, {ts.hi}]")
    return t1, t2


def leader_war_payoff(model: CrisisModel, i: int, theta) -> float:
    """Ex-post leader war payoff ``p_i - lambda_i c_i`` at the type pair ``theta``."""
    t = _type_pair(model, theta)
    return float(model.leader_payoff(i, t[i], t[_other(i)]))


def citizen_war_payoff(model: CrisisModel, i: int, theta) -> float:
    t = _type_pair(model, theta)
    return float(model.citizen_payoff(i, t[i], t[_other(i)]))


# --------------------------------------------------------------------------
# Validation


def _check_model(model: CrisisModel) -> list[str]:
    errors: list[str] = []
    if len(model.states) != 2:
        return ["states: exactly two states are required"]
    if model.resource != 1.0:
        errors.append("resource: the disputed resource is normalized to 1")

    for i, st in enumerate(model.states):
        where = f"states[{i}]"
        ts = st.type_space
        if not (math.isfinite(ts.lo) and math.isfinite(ts.hi)) or not ts.lo < ts.hi:
            errors.append(f"{where}.type_space: need finite lo < hi (got lo={ts.lo}, hi={ts.hi})")
        if not 0.0 <= st.gamma <= 1.0:
            errors.append(f"{where}.gamma: gamma out of range [0, 1] (got {st.gamma})")
        if not st.bias > 0.0:
            errors.append(f"{where}.lambda: political bias must be > 0 (got {st.bias})")
        errors.extend(_check_belief(st.belief, f"{where}.distribution"))
        errors.extend(_check_audience(st.audience_cost, f"{where}.audience_cost"))

    tech = model.war_tech
    if tech.kind not in WarTechnology.KINDS:
        errors.append(f"war_technology.kind: unknown kind {tech.kind!r}")
        return errors
    if errors:
        # probing the technology needs sane type spaces
        return errors

    g1 = model.support(0).linspace(PROBE_POINTS)
    g2 = model.support(1).linspace(PROBE_POINTS)
    T1, T2 = np.meshgrid(g1, g2, indexing="ij")
    p1 = tech.win_prob(0, T1, T2)
    p2 = tech.win_prob(1, T2, T1)
    for i, p in enumerate((p1, p2)):
        bad = np.argwhere(~np.isfinite(p) | (p < -1e-12) | (p > 1 + 1e-12))
        if len(bad):
            k, l = bad[0]
            errors.append(
                f"war_technology: winning probability outside [0,1] for state {i} "
                f"at theta=({g1[k]:.6g}, {g2[l]:.6g}): p={p[k, l]:.6g}"
            )
    gap = np.abs(p1 + p2 - 1.0)
    if np.max(gap) > 1e-9:
        k, l = np.unravel_index(np.argmax(gap), gap.shape)
        errors.append(
            f"war_technology: winning probabilities must sum to 1, "
            f"got {p1[k, l] + p2[k, l]:.6g} at theta=({g1[k]:.6g}, {g2[l]:.6g})"
        )

    for i in (0, 1):
        own = model.support(i).linspace(PROBE_POINTS)
        opp = model.support(_other(i)).linspace(PROBE_POINTS)
        w = model.leader_payoff(i, own[:, None], opp[None, :])
        if not np.all(np.diff(w, axis=0) > 0):
            errors.append(
                f"states[{i}]: leader war payoff not strictly increasing in own type on the probe grid"
            )
    return errors


def _check_belief(b: BeliefDistribution, where: str) -> list[str]:
    if b.kind not in BeliefDistribution.KINDS:
        return [f"{where}.kind: unknown distribution {b.kind!r}"]
    p = b.params
    if b.kind == "beta":
        try:
            a, bb = float(p["a"]), float(p["b"])
        except (KeyError, TypeError, ValueError):
            return [f"{where}.params: beta needs numeric a and b"]
        if not (a > 0 and bb > 0):
            return [f"{where}.params: beta shape parameters must be > 0 (got a={a}, b={bb})"]
    if b.kind == "truncated-normal":
        try:
            float(p["mu"])
            sigma = float(p["sigma"])
        except (KeyError, TypeError, ValueError):
            return [f"{where}.params: truncated-normal needs numeric mu and sigma"]
        if not sigma > 0:
            return [f"{where}.params: truncated-normal sigma must be > 0 (got {sigma})"]
    ts = b.support
    if not ts.lo < ts.hi:
        return []
    grid = ts.linspace(PROBE_POINTS)
    with np.errstate(all="ignore"):
        c = b.cdf(grid)
        d = b.pdf(grid[1:-1])
    if abs(c[0]) > 1e-12 or abs(c[-1] - 1) > 1e-12 or np.any(np.diff(c) < 0):
        return [f"{where}: cdf must run from 0 to 1 and be nondecreasing"]
    if not np.all(d > 0):
        return [f"{where}: density must be strictly positive on the interior of the support"]
    return []


def _check_audience(rule: AudienceCostRule, where: str) -> list[str]:
    if rule.kind not in AudienceCostRule.KINDS:
        return [f"{where}.kind: unknown audience-cost rule {rule.kind!r}"]
    if rule.kind == "tabulated":
        x = rule.params.get("x")
        a = rule.params.get("a")
        if x is None or a is None or len(x) != len(a) or len(x) < 2:
            return [f"{where}.params: tabulated rule needs matching x and a lists"]
        if any(q <= p for p, q in zip(x, x[1:])):
            return [f"{where}.params: tabulated x nodes must be strictly increasing"]
    return []


def _num(d: Mapping, key: str, where: str, errors: list, default=None):
    if key not in d:
        if default is not None:
            return default
        errors.append(f"{where}.{key}: missing")
        return math.nan
    try:
        v = float(d[key])
    except (TypeError, ValueError):
        errors.append(f"{where}.{key}: not a number ({d[key]!r})")
        return math.nan
    return v


def model_from_dict(desc: Mapping) -> CrisisModel:
    """Build a model from its JSON description, collecting every field error."""
    errors: list[str] = []
    if not isinstance(desc, Mapping):
        raise ModelValidationError(["model: expected an object"])
    raw_states = desc.get("states")
    if not isinstance(raw_states, list) or len(raw_states) != 2:
        raise ModelValidationError(["states: expected an array of exactly 2 states"])

    states = []
    for i, raw in enumerate(raw_states):
        where = f"states[{i}]"
        if not isinstance(raw, Mapping):
            errors.append(f"{where}: expected an object")
            continue
        ts_raw = raw.get("type_space", {})
        lo = _num(ts_raw, "lo", f"{where}.type_space", errors)
        hi = _num(ts_raw, "hi", f"{where}.type_space", errors)
        ts = TypeSpace(lo, hi)
        dist_raw = raw.get("distribution", {"kind": "uniform"})
        belief = BeliefDistribution(
            str(dist_raw.get("kind", "uniform")), ts, dict(dist_raw.get("params", {}))
        )
        gamma = _num(raw, "gamma", where, errors, default=1.0)
        bias = _num(raw, "lambda", where, errors, default=1.0)
        ac_raw = raw.get("audience_cost", {"kind": "zero"})
        rule = AudienceCostRule(str(ac_raw.get("kind", "zero")), dict(ac_raw.get("params", {})))
        states.append(State(ts, belief, gamma, bias, rule))

    tech_raw = desc.get("war_technology")
    tech = None
    if not isinstance(tech_raw, Mapping):
        errors.append("war_technology: missing")
    else:
        kind = tech_raw.get("kind")
        params = tech_raw.get("params", {})
        try:
            if kind == "one-sided-cost":
                p = params.get("p", [0.5, 0.5])
                tech = WarTechnology.one_sided(p)
            elif kind == "two-sided-difference":
                h = [component_from_dict(s) for s in params["h"]]
                g = [component_from_dict(s) for s in params["g"]]
                base = params.get("base", [0.0, 0.0])
                costs = params["costs"]
                if not (len(h) == len(g) == len(base) == len(costs) == 2):
                    raise ValueError("h, g, base and costs need one entry per state")
                tech = WarTechnology.two_sided(h, g, base, costs)
            else:
                errors.append(f"war_technology.kind: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"war_technology.params: {exc}")

    if errors:
        raise ModelValidationError(errors)
    return validate_model(CrisisModel(tuple(states), tech))


def validate_model(candidate) -> CrisisModel:
    """Return a validated :class:`CrisisModel` or raise :class:`ModelValidationError`.

    Accepts either a model object or its dict description.
    """
    if not isinstance(candidate, CrisisModel):
        return model_from_dict(candidate)
    errors = _check_model(candidate)
    if errors:
        raise ModelValidationError(errors)
    return candidate
