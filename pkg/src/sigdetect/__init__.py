"""Two-observer sequential binary hypothesis detection with signaling.

Each observer privately watches a noisy symbol stream and must eventually
declare one of two hypotheses; until then its only visible output is a
blank.  Because stopping decisions are observed, a policy communicates
through *when* and *how* it stops -- the signaling that this package's
solver, evaluators and counterexample machinery are built around.
"""

from .belief import (
    ImpossibleOutcomeError,
    Outcome,
    outcome_distribution,
    update_joint,
    update_own,
)
from .dp import (
    ConcavityCell,
    ConcavityReport,
    IterationRound,
    RegionBoundViolation,
    ValueGrid,
    ValueOracle,
    best_response,
    check_concavity,
    extract_thresholds,
    person_by_person,
)
from .evaluation import (
    CostBreakdown,
    PathOutcome,
    PolicySpaceTooLargeError,
    SimResult,
    brute_force_best_response,
    brute_force_global,
    enumerate_policies,
    exact_cost,
    policy_count,
    simulate,
)
from .policies import (
    ACTIVE,
    BLANK,
    DECLARE_0,
    DECLARE_1,
    HistoryPolicy,
    IntervalPolicy,
    PolicyFormatError,
    PolicyIncompleteError,
    admissible_actions,
    blank_until_horizon_policy,
    decision_keys,
    load_policy,
    save_policy,
)
from .scenario import (
    DEFAULT_MISTAKE_COST,
    POLICY_KINDS,
    ObservationModel,
    Scenario,
    ScenarioFormatError,
    ScenarioValidationError,
    ValidationReport,
    builtin_counterexample,
    builtin_policies,
    builtin_tiny_instance,
    load_scenario,
    reference_pair_cost,
    save_scenario,
    validate_scenario,
)
from .signaling import (
    MessageLikelihoodTable,
    StopSideTable,
    message_likelihoods,
    stop_side_table,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE",
    "BLANK",
    "DECLARE_0",
    "DECLARE_1",
    "DEFAULT_MISTAKE_COST",
    "POLICY_KINDS",
    "ConcavityCell",
    "ConcavityReport",
    "CostBreakdown",
    "HistoryPolicy",
    "ImpossibleOutcomeError",
    "IntervalPolicy",
    "IterationRound",
    "MessageLikelihoodTable",
    "ObservationModel",
    "Outcome",
    "PathOutcome",
    "PolicyFormatError",
    "PolicyIncompleteError",
    "PolicySpaceTooLargeError",
    "RegionBoundViolation",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioValidationError",
    "SimResult",
    "StopSideTable",
    "ValidationReport",
    "ValueGrid",
    "ValueOracle",
    "admissible_actions",
    "best_response",
    "blank_until_horizon_policy",
    "brute_force_best_response",
    "brute_force_global",
    "builtin_counterexample",
    "builtin_policies",
    "builtin_tiny_instance",
    "check_concavity",
    "decision_keys",
    "enumerate_policies",
    "exact_cost",
    "extract_thresholds",
    "load_policy",
    "load_scenario",
    "message_likelihoods",
    "outcome_distribution",
    "person_by_person",
    "policy_count",
    "reference_pair_cost",
    "save_policy",
    "save_scenario",
    "simulate",
    "stop_side_table",
    "update_joint",
    "update_own",
    "validate_scenario",
    "__version__",
]
