"""Partial agreement: algorithms, executors, solvability catalog, verifier."""

from .core import (
    BoundReport,
    BudgetExceededError,
    ModelViolationError,
    ProblemSpec,
    SpecError,
    evaluate_bounds,
)
from .shmem import (
    AsyncSchedule,
    Decide,
    ExecutionTrace,
    Propose,
    Read,
    RegisterSpace,
    Write,
    enumerate_async_schedules,
    run_async,
)
from .syncmp import (
    CrashPattern,
    RoundTrace,
    count_crash_patterns,
    enumerate_crash_patterns,
    run_sync,
)
from .objects import ConsensusObject, PartialAgreementOracle, compliant_assignments
from .algorithms import CATALOG, build_algorithm, get_algorithm
from .verify import (
    ExplorationReport,
    ExploreBudget,
    Verdict,
    check_agreement,
    explore,
    explore_from_replay,
    measure_empirical_k,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "BudgetExceededError",
    "ModelViolationError",
    "ProblemSpec",
    "SpecError",
    "evaluate_bounds",
    "AsyncSchedule",
    "Decide",
    "ExecutionTrace",
    "Propose",
    "Read",
    "RegisterSpace",
    "Write",
    "enumerate_async_schedules",
    "run_async",
    "CrashPattern",
    "RoundTrace",
    "count_crash_patterns",
    "enumerate_crash_patterns",
    "run_sync",
    "ConsensusObject",
    "PartialAgreementOracle",
    "compliant_assignments",
    "CATALOG",
    "build_algorithm",
    "get_algorithm",
    "ExplorationReport",
    "ExploreBudget",
    "Verdict",
    "check_agreement",
    "explore",
    "explore_from_replay",
    "measure_empirical_k",
]
