"""Deterministic discrete-event simulator of a multi-resource cluster with a
dynamic reservation scheduler, FCFS/static baselines, an online release-time
estimator, and an exact small-instance oracle."""

from .baselines import FcfsScheduler, SCHEDULERS, StaticReservationScheduler, make_scheduler
from .engine import Engine, Grant, ScheduleTrace, Scheduler, load_trace, run, save_trace
from .estimator import ReleaseEstimator, replay_trace
from .metrics import RunSummary, compare, summaries_to_csv, summarize
from .oracle import (
    IlpInstance,
    IlpSolution,
    IlpTask,
    check_feasibility,
    check_pool_accounting,
    check_trace,
    enumerate_optimal,
    instance_from_scenario,
    reconstruct_convoy_example,
    solve_exact,
)
from .reservation import ReservationScheduler, adjust_ratio
from .resources import ClusterState, ContainerLease, LeaseState, ResourceVector, Server
from .workload import (
    Category,
    GenSpec,
    JobSpec,
    PhaseSpec,
    Scenario,
    SchedulerConfig,
    TaskKind,
    TaskSpec,
    classify_demand,
    expand_job,
    generate,
    ideal_ground_truth,
    load_scenario,
    save_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Category",
    "ClusterState",
    "ContainerLease",
    "Engine",
    "FcfsScheduler",
    "GenSpec",
    "Grant",
    "IlpInstance",
    "IlpSolution",
    "IlpTask",
    "JobSpec",
    "LeaseState",
    "PhaseSpec",
    "ReleaseEstimator",
    "ReservationScheduler",
    "ResourceVector",
    "RunSummary",
    "SCHEDULERS",
    "Scenario",
    "ScheduleTrace",
    "Scheduler",
    "SchedulerConfig",
    "Server",
    "StaticReservationScheduler",
    "TaskKind",
    "TaskSpec",
    "adjust_ratio",
    "check_feasibility",
    "check_pool_accounting",
    "check_trace",
    "classify_demand",
    "compare",
    "enumerate_optimal",
    "expand_job",
    "generate",
    "ideal_ground_truth",
    "instance_from_scenario",
    "load_scenario",
    "load_trace",
    "make_scheduler",
    "reconstruct_convoy_example",
    "replay_trace",
    "run",
    "save_scenario",
    "save_trace",
    "solve_exact",
    "summaries_to_csv",
    "summarize",
]
