"""Online multi-commodity facility location workbench."""

from .instance import (
    CostModel,
    Instance,
    MetricSpace,
    Request,
    build_line_metric,
    check_condition1,
    check_subadditivity,
    facility_cost,
    parse_instance,
    serialize_instance,
    validate_metric,
)
from .solution import (
    Assignment,
    CostBreakdown,
    Facility,
    Solution,
    check_feasible,
    evaluate_cost,
    split_requests,
)
from .primal_dual import run_pd
from .randomized import build_classes, run_rand, run_rand_traced
from .oracle import (
    DualCertificate,
    OracleLimits,
    check_dual_feasibility,
    gamma,
    harmonic,
    solve_opt_bruteforce,
    solve_opt_vectorized,
)
from .ordered_cover import COrderedInstance, greedy_cover, validate_cordered, weight_bound
from .adversary import GenParams, gen_gx, gen_random, gen_thm1
from .baselines import run_no_prediction, run_per_commodity

__all__ = [
    "Assignment",
    "COrderedInstance",
    "CostBreakdown",
    "CostModel",
    "DualCertificate",
    "Facility",
    "GenParams",
    "Instance",
    "MetricSpace",
    "OracleLimits",
    "Request",
    "Solution",
    "build_classes",
    "build_line_metric",
    "check_condition1",
    "check_dual_feasibility",
    "check_feasible",
    "check_subadditivity",
    "evaluate_cost",
    "facility_cost",
    "gamma",
    "gen_gx",
    "gen_random",
    "gen_thm1",
    "greedy_cover",
    "harmonic",
    "parse_instance",
    "run_no_prediction",
    "run_pd",
    "run_per_commodity",
    "run_rand",
    "run_rand_traced",
    "serialize_instance",
    "solve_opt_bruteforce",
    "solve_opt_vectorized",
    "split_requests",
    "validate_cordered",
    "validate_metric",
    "weight_bound",
]
