"""Mechanism design for crisis bargaining with domestic constraints."""

from .analysis import (
    InfeasibilityCertificate,
    PlausibilityReport,
    WarRegionReport,
    check_monotone_war_propensity,
    construct_peaceful_settlement,
    peace_plausibility,
    war_region,
)
from .mechanism import (
    AuditReport,
    DirectMechanism,
    GridMismatchError,
    PreconditionError,
    audit_mechanism,
    check_constant_peace_payoff,
    check_envelope_condition,
    check_feasibility_and_peace,
    check_incentive_compatibility,
    check_participation,
)
from .model import (
    AudienceCostRule,
    BeliefDistribution,
    CrisisModel,
    ModelValidationError,
    State,
    TypeSpace,
    WarTechnology,
    citizen_war_payoff,
    leader_war_payoff,
    model_from_dict,
    validate_model,
)
from .payoffs import (
    interim_citizen_war_payoff,
    interim_peace_payoffs,
    interim_profile,
    interim_utility_report,
    interim_utility_truthful,
    interim_war_payoff,
)
from .presets import canonical_model, one_sided_model
from .solver import GridProgram, SolverError, build_program, minimize_war_probability

__version__ = "0.1.0"
