"""Planning with tiered interval cost estimators and target quality bounds."""

from .errors import (
    EpsplanError,
    EstimatorContractError,
    ExternalEstimatorError,
    InconsistentEstimatorsError,
    OutOfSubsetError,
    ParseError,
    PreconditionError,
    StateCapError,
    TaskValidationError,
)
from .estimation import (
    BoundCache,
    EstimatorSet,
    EstimatorSpec,
    ExternalEstimatorClient,
    PlanBounds,
    bound_ratio,
    eta_eff,
    make_cache,
    meets_bound,
)
from .ese import EseContext, EseResult, ese, run_asec_with_ese
from .heuristics import HMaxHeuristic, cost_view, h_blind, make_heuristic
from .ingest import (
    emit_native,
    ground,
    ground_task,
    parse_native,
    parse_native_file,
    parse_pddl_files,
    parse_pddl_subset,
)
from .oracle import (
    CostOracleTable,
    check_bound_theorem,
    check_epsilon_optimal,
    dijkstra_cost,
    dijkstra_optimal,
    validate_assumptions,
)
from .search import SearchResult, SearchStats, Status, asec, fully_lazy, indifferent
from .task import (
    Atom,
    GroundAction,
    GroundTask,
    Plan,
    State,
    applicable,
    apply_action,
    validate_plan,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BoundCache",
    "CostOracleTable",
    "EseContext",
    "EseResult",
    "EstimatorContractError",
    "EstimatorSet",
    "EstimatorSpec",
    "EpsplanError",
    "ExternalEstimatorClient",
    "ExternalEstimatorError",
    "GroundAction",
    "GroundTask",
    "HMaxHeuristic",
    "InconsistentEstimatorsError",
    "OutOfSubsetError",
    "ParseError",
    "Plan",
    "PlanBounds",
    "PreconditionError",
    "SearchResult",
    "SearchStats",
    "State",
    "StateCapError",
    "Status",
    "TaskValidationError",
    "applicable",
    "apply_action",
    "asec",
    "bound_ratio",
    "check_bound_theorem",
    "check_epsilon_optimal",
    "cost_view",
    "dijkstra_cost",
    "dijkstra_optimal",
    "emit_native",
    "ese",
    "eta_eff",
    "fully_lazy",
    "ground",
    "ground_task",
    "h_blind",
    "indifferent",
    "make_cache",
    "make_heuristic",
    "meets_bound",
    "parse_native",
    "parse_native_file",
    "parse_pddl_files",
    "parse_pddl_subset",
    "run_asec_with_ese",
    "validate_assumptions",
    "validate_plan",
]
