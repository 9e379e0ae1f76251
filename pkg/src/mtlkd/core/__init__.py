"""Instances, solutions, the decoding state machine and feasibility rules."""

from .batch import BatchEnv
from .construct import (
    StepDistribution,
    construct,
    nearest_policy,
    select_action,
    softmin_distance_policy,
    uniform_policy,
)
from .instance import EPS, Instance, make_instance
from .solution import (
    Solution,
    StructureError,
    VerifyReport,
    Violation,
    evaluate,
    route_cost,
    verify,
)
from .state import (
    ContractViolation,
    DecodeState,
    FeasibilityMask,
    feasibility_mask,
    initial_state,
    transition,
)
from .variant import ALL_VARIANTS, CVRP, OVRP, OVRPTW, SEEN_VARIANTS, VRPB, VRPL, VRPTW, VariantSpec

__all__ = [
    "ALL_VARIANTS",
    "BatchEnv",
    "CVRP",
    "ContractViolation",
    "DecodeState",
    "EPS",
    "FeasibilityMask",
    "Instance",
    "OVRP",
    "OVRPTW",
    "SEEN_VARIANTS",
    "Solution",
    "StepDistribution",
    "StructureError",
    "VRPB",
    "VRPL",
    "VRPTW",
    "VariantSpec",
    "VerifyReport",
    "Violation",
    "construct",
    "evaluate",
    "feasibility_mask",
    "initial_state",
    "make_instance",
    "nearest_policy",
    "route_cost",
    "select_action",
    "softmin_distance_policy",
    "transition",
    "uniform_policy",
    "verify",
]
