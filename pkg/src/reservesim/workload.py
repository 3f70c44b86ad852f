"""Workload description, synthetic generation and scenario file I/O.

A Scenario is pure data: servers, jobs made of phases, a scheduler config
and a seed.  Phases expand deterministically into per-task specs; the three
execution phenomena (staggered starts, short heading tasks, long trailing
tasks) are injected at expansion time from the phase parameters alone, so a
saved scenario replays byte-identically.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .errors import ConfigurationError, GenerationError, ScenarioParseError
from .resources import ResourceVector

SCHEMA_VERSION = 1

DEFAULT_STRETCH = 1.38  # trailing task ~38% longer than its peers
DEFAULT_FILL = 0.25  # underfilled final data block fraction


class Category(enum.Enum):
    SD = "SD"  # small demand
    LD = "LD"  # large demand


class TaskKind(enum.Enum):
    NORMAL = "Normal"
    HEADING = "Heading"
    TRAILING = "Trailing"


@dataclass(frozen=True)
class SchedulerConfig:
    """Tunables shared by the estimator and the reservation scheduler.

    ts/te are task-count thresholds for the start/finish window detectors,
    pw is the detection window in ticks, delta0 the initial reserve ratio,
    theta the small/large job indicator, and delays the per-lease ticks
    spent in Reserved, Allocated and Acquired.
    """

    ts: int = 5
    te: int = 5
    pw: int = 10
    delta0: float = 0.10
    theta: float = 0.10
    delta_min: float = 0.05
    delta_max: float = 0.95
    delays: tuple[int, int, int] = (1, 1, 1)

    def theta_fraction(self) -> Fraction:
        return Fraction(str(self.theta))

    def delta0_fraction(self) -> Fraction:
        return Fraction(str(self.delta0))

    def delta_bounds(self) -> tuple[Fraction, Fraction]:
        return Fraction(str(self.delta_min)), Fraction(str(self.delta_max))


@dataclass(frozen=True)
class PhaseSpec:
    """One wave of identical tasks within a job."""

    phase_index: int
    task_count: int
    base_duration: int
    demand: ResourceVector
    start_spread: int = 0
    heading_count: int = 0
    trailing_count: int = 0
    trailing_stretch: float = DEFAULT_STRETCH
    heading_fill: float = DEFAULT_FILL

    def __post_init__(self):
        if self.task_count < 1:
            raise ConfigurationError("phase needs at least one task")
        if self.base_duration < 1:
            raise ConfigurationError("base_duration must be >= 1")
        if self.heading_count + self.trailing_count > self.task_count:
            raise ConfigurationError("heading + trailing exceeds task count")
        if self.trailing_count and self.trailing_stretch <= 1:
            raise ConfigurationError("trailing_stretch must be > 1")
        if self.heading_count and self.base_duration < 2:
            raise ConfigurationError("heading tasks need base_duration >= 2")
        if not 0 < self.heading_fill < 1:
            raise ConfigurationError("heading_fill must be in (0,1)")
        if self.start_spread < 0:
            raise ConfigurationError("start_spread must be >= 0")
        if self.start_spread > 0 and self.task_count < 2:
            raise ConfigurationError("start_spread > 0 needs at least two tasks")


@dataclass(frozen=True)
class JobSpec:
    job_id: int
    submit_tick: int
    phases: tuple[PhaseSpec, ...]

    def __post_init__(self):
        if not self.phases:
            raise ConfigurationError(f"job {self.job_id} has no phases")
        if self.submit_tick < 0:
            raise ConfigurationError(f"job {self.job_id} has negative submit tick")

    @property
    def peak_slot_demand(self) -> int:
        """Largest concurrent container demand across phases."""
        return max(p.task_count for p in self.phases)


@dataclass(frozen=True)
class TaskSpec:
    """One expanded task: a row of the demand matrix plus its duration."""

    task_id: str
    job_id: int
    phase_index: int
    index_in_phase: int
    demand: ResourceVector
    duration: int
    kind: TaskKind
    eligible_offset: int  # ticks after the phase unlocks


@dataclass(frozen=True)
class Scenario:
    servers: tuple[ResourceVector, ...]
    jobs: tuple[JobSpec, ...]
    config: SchedulerConfig = field(default_factory=SchedulerConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.servers:
            raise ConfigurationError("scenario needs at least one server")
        k = len(self.servers[0])
        for cap in self.servers:
            if len(cap) != k:
                raise ConfigurationError("server capacity dimensions differ")
        for job in self.jobs:
            for phase in job.phases:
                if len(phase.demand) != k:
                    raise ConfigurationError(
                        f"job {job.job_id} phase {phase.phase_index}: demand dimension != k"
                    )

    @property
    def k(self) -> int:
        return len(self.servers[0])

    @property
    def total_slots(self) -> int:
        return sum(min(cap.amounts) for cap in self.servers)

    def digest(self) -> str:
        """Stable short identifier of the scenario contents."""
        payload = json.dumps(scenario_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]

    def with_config(self, config: SchedulerConfig) -> "Scenario":
        return replace(self, config=config)


def classify_demand(demand_slots: int, available_slots: int, theta: Fraction) -> Category:
    """Large-demand iff the request exceeds theta times the available containers."""
    if not 0 < theta < 1:
        raise ConfigurationError("theta must be in (0,1)")
    return Category.LD if demand_slots > available_slots * theta else Category.SD


def intrinsic_category(job: JobSpec, total_slots: int, theta: Fraction) -> Category:
    """Category the job would get on an idle cluster; used for reporting."""
    return classify_demand(job.peak_slot_demand, total_slots, theta)


# ---------------------------------------------------------------------------
# phase expansion


def _start_offsets(count: int, spread: int) -> list[int]:
    if count == 1 or spread == 0:
        return [0] * count
    return [round(i * spread / (count - 1)) for i in range(count)]


def heading_duration(base: int, fill: float) -> int:
    return min(base - 1, max(1, round(base * fill)))


def trailing_duration(base: int, stretch: float) -> int:
    return max(base + 1, round(base * stretch))


def expand_phase(job_id: int, phase: PhaseSpec) -> list[TaskSpec]:
    """Expand a phase into tasks.

    The first trailing_count tasks are trailing (data skew hits arbitrary
    partitions; the choice is fixed for determinism) and the last
    heading_count are heading (underfilled final data blocks).
    """
    offsets = _start_offsets(phase.task_count, phase.start_spread)
    tasks = []
    for i in range(phase.task_count):
        if i >= phase.task_count - phase.heading_count:
            kind = TaskKind.HEADING
            duration = heading_duration(phase.base_duration, phase.heading_fill)
        elif i < phase.trailing_count:
            kind = TaskKind.TRAILING
            duration = trailing_duration(phase.base_duration, phase.trailing_stretch)
        else:
            kind = TaskKind.NORMAL
            duration = phase.base_duration
        tasks.append(
            TaskSpec(
                task_id=f"j{job_id}-p{phase.phase_index}-t{i}",
                job_id=job_id,
                phase_index=phase.phase_index,
                index_in_phase=i,
                demand=phase.demand,
                duration=duration,
                kind=kind,
                eligible_offset=offsets[i],
            )
        )
    return tasks


def expand_job(job: JobSpec) -> list[list[TaskSpec]]:
    return [expand_phase(job.job_id, phase) for phase in job.phases]


# ---------------------------------------------------------------------------
# scenario file I/O


def scenario_to_dict(scenario: Scenario) -> dict:
    cfg = scenario.config
    config = {
        "ts": cfg.ts,
        "te": cfg.te,
        "pw": cfg.pw,
        "delta0": cfg.delta0,
        "theta": cfg.theta,
        "delta_min": cfg.delta_min,
        "delta_max": cfg.delta_max,
    }
    if cfg.delays != (1, 1, 1):
        config["delays"] = list(cfg.delays)
    return {
        "version": SCHEMA_VERSION,
        "k": scenario.k,
        "servers": [list(cap.amounts) for cap in scenario.servers],
        "jobs": [
            {
                "id": job.job_id,
                "submit": job.submit_tick,
                "phases": [
                    _phase_to_dict(phase) for phase in job.phases
                ],
            }
            for job in scenario.jobs
        ],
        "config": config,
        "seed": scenario.seed,
    }


def _phase_to_dict(phase: PhaseSpec) -> dict:
    d = {
        "tasks": phase.task_count,
        "base_duration": phase.base_duration,
        "demand": list(phase.demand.amounts),
        "spread": phase.start_spread,
        "heading": phase.heading_count,
        "trailing": phase.trailing_count,
        "stretch": phase.trailing_stretch,
    }
    if phase.heading_fill != DEFAULT_FILL:
        d["fill"] = phase.heading_fill
    return d


def _require(obj: dict, key: str, types, path: str):
    if key not in obj:
        raise ScenarioParseError(f"{path}.{key}", "missing required field")
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ScenarioParseError(f"{path}.{key}", f"expected {types}, got {type(value).__name__}")
    return value


def _check_unknown(obj: dict, allowed: set[str], path: str):
    for key in obj:
        if key not in allowed:
            raise ScenarioParseError(f"{path}.{key}", "unknown field")


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioParseError("$", "scenario must be a JSON object")
    _check_unknown(data, {"version", "k", "servers", "jobs", "config", "seed"}, "$")
    version = _require(data, "version", int, "$")
    if version != SCHEMA_VERSION:
        raise ScenarioParseError("$.version", f"unsupported version {version}")
    k = _require(data, "k", int, "$")
    if k < 1:
        raise ScenarioParseError("$.k", "k must be >= 1")

    servers_raw = _require(data, "servers", list, "$")
    servers = []
    for i, cap in enumerate(servers_raw):
        path = f"$.servers[{i}]"
        if not isinstance(cap, list) or len(cap) != k:
            raise ScenarioParseError(path, f"expected a list of {k} integers")
        for j, a in enumerate(cap):
            if not isinstance(a, int) or isinstance(a, bool) or a < 0:
                raise ScenarioParseError(f"{path}[{j}]", "capacity must be a nonnegative integer")
        servers.append(ResourceVector(tuple(cap)))
    if not servers:
        raise ScenarioParseError("$.servers", "at least one server required")

    config = _parse_config(_require(data, "config", dict, "$"))

    jobs_raw = _require(data, "jobs", list, "$")
    jobs = []
    for ji, job_raw in enumerate(jobs_raw):
        path = f"$.jobs[{ji}]"
        if not isinstance(job_raw, dict):
            raise ScenarioParseError(path, "job must be an object")
        _check_unknown(job_raw, {"id", "submit", "phases"}, path)
        job_id = _require(job_raw, "id", int, path)
        submit = _require(job_raw, "submit", int, path)
        if submit < 0:
            raise ScenarioParseError(f"{path}.submit", "submit tick must be >= 0")
        phases_raw = _require(job_raw, "phases", list, path)
        if not phases_raw:
            raise ScenarioParseError(f"{path}.phases", "job needs at least one phase")
        phases = []
        for pi, phase_raw in enumerate(phases_raw):
            phases.append(_parse_phase(phase_raw, pi, k, f"{path}.phases[{pi}]"))
        jobs.append(JobSpec(job_id=job_id, submit_tick=submit, phases=tuple(phases)))

    seed = _require(data, "seed", int, "$")
    try:
        return Scenario(servers=tuple(servers), jobs=tuple(jobs), config=config, seed=seed)
    except ConfigurationError as exc:
        raise ScenarioParseError("$", str(exc)) from exc


def _parse_phase(raw, pi: int, k: int, path: str) -> PhaseSpec:
    if not isinstance(raw, dict):
        raise ScenarioParseError(path, "phase must be an object")
    allowed = {"tasks", "base_duration", "demand", "spread", "heading", "trailing", "stretch", "fill"}
    _check_unknown(raw, allowed, path)
    tasks = _require(raw, "tasks", int, path)
    base = _require(raw, "base_duration", int, path)
    if base < 1:
        raise ScenarioParseError(f"{path}.base_duration", "duration must be >= 1")
    if tasks < 1:
        raise ScenarioParseError(f"{path}.tasks", "task count must be >= 1")
    demand_raw = _require(raw, "demand", list, path)
    if len(demand_raw) != k:
        raise ScenarioParseError(f"{path}.demand", f"expected {k} components")
    for j, a in enumerate(demand_raw):
        if not isinstance(a, int) or isinstance(a, bool) or a < 0:
            raise ScenarioParseError(f"{path}.demand[{j}]", "demand must be a nonnegative integer")
    spread = _require(raw, "spread", int, path)
    heading = _require(raw, "heading", int, path)
    trailing = _require(raw, "trailing", int, path)
    stretch = _require(raw, "stretch", (int, float), path)
    fill = raw.get("fill", DEFAULT_FILL)
    if not isinstance(fill, (int, float)) or isinstance(fill, bool):
        raise ScenarioParseError(f"{path}.fill", "fill must be a number")
    try:
        return PhaseSpec(
            phase_index=pi,
            task_count=tasks,
            base_duration=base,
            demand=ResourceVector(tuple(demand_raw)),
            start_spread=spread,
            heading_count=heading,
            trailing_count=trailing,
            trailing_stretch=float(stretch),
            heading_fill=float(fill),
        )
    except ConfigurationError as exc:
        raise ScenarioParseError(path, str(exc)) from exc


def _parse_config(raw: dict) -> SchedulerConfig:
    path = "$.config"
    allowed = {"ts", "te", "pw", "delta0", "theta", "delta_min", "delta_max", "delays"}
    _check_unknown(raw, allowed, path)
    ts = _require(raw, "ts", int, path)
    te = _require(raw, "te", int, path)
    pw = _require(raw, "pw", int, path)
    delta0 = _require(raw, "delta0", (int, float), path)
    theta = _require(raw, "theta", (int, float), path)
    delta_min = _require(raw, "delta_min", (int, float), path)
    delta_max = _require(raw, "delta_max", (int, float), path)
    delays_raw = raw.get("delays", [1, 1, 1])
    if (
        not isinstance(delays_raw, list)
        or len(delays_raw) != 3
        or any(not isinstance(d, int) or isinstance(d, bool) or d < 0 for d in delays_raw)
    ):
        raise ScenarioParseError(f"{path}.delays", "delays must be three nonnegative integers")
    if pw < 1:
        raise ScenarioParseError(f"{path}.pw", "pw must be >= 1")
    for name, value in (("theta", theta), ("delta0", delta0)):
        if not 0 < value < 1:
            raise ScenarioParseError(f"{path}.{name}", "must be in (0,1)")
    if not 0 < delta_min <= delta_max < 1:
        raise ScenarioParseError(f"{path}.delta_min", "need 0 < delta_min <= delta_max < 1")
    return SchedulerConfig(
        ts=ts,
        te=te,
        pw=pw,
        delta0=float(delta0),
        theta=float(theta),
        delta_min=float(delta_min),
        delta_max=float(delta_max),
        delays=tuple(delays_raw),
    )


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioParseError("$", f"invalid JSON: {exc}") from exc
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# synthetic generation


@dataclass(frozen=True)
class GenSpec:
    """Parameters for synthetic workload generation."""

    job_count: int = 20
    small_fraction: float = 0.3
    submit_interval: int = 5
    server_count: int = 2
    server_capacity: tuple[int, ...] = (10, 10)
    small_tasks: tuple[int, int] = (1, 2)
    large_tasks: tuple[int, int] = (8, 14)
    duration: tuple[int, int] = (15, 40)
    small_duration: tuple[int, int] = (5, 12)
    phases: tuple[int, int] = (1, 2)
    spread: tuple[int, int] = (0, 3)
    heading_rate: float = 0.0
    trailing_rate: float = 0.0
    task_demand: tuple[int, int] = (1, 1)
    config: SchedulerConfig = field(default_factory=SchedulerConfig)


@dataclass(frozen=True)
class PhaseTruth:
    """Idealized (uncongested-cluster) timeline of one phase."""

    job_id: int
    phase_index: int
    spread: int
    unlock_tick: int
    start_ticks: tuple[int, ...]
    finish_ticks: tuple[int, ...]
    kinds: tuple[TaskKind, ...]
    earliest_normal_finish: int

    def cumulative_released(self, t: int) -> int:
        return sum(1 for f in self.finish_ticks if f <= t)


@dataclass(frozen=True)
class GroundTruth:
    phases: tuple[PhaseTruth, ...]

    def phase(self, job_id: int, phase_index: int) -> PhaseTruth:
        for p in self.phases:
            if p.job_id == job_id and p.phase_index == phase_index:
                return p
        raise KeyError((job_id, phase_index))


def ideal_ground_truth(scenario: Scenario) -> GroundTruth:
    """Per-phase start/finish schedule assuming instant grants.

    Valid for estimator validation only when the cluster never congests.
    """
    delay = sum(scenario.config.delays)
    truths = []
    for job in scenario.jobs:
        unlock = job.submit_tick
        for phase in job.phases:
            tasks = expand_phase(job.job_id, phase)
            starts = tuple(unlock + t.eligible_offset + delay for t in tasks)
            finishes = tuple(s + t.duration for s, t in zip(starts, tasks))
            normal_finishes = [
                f for f, t in zip(finishes, tasks) if t.kind is not TaskKind.HEADING
            ]
            truths.append(
                PhaseTruth(
                    job_id=job.job_id,
                    phase_index=phase.phase_index,
                    spread=phase.start_spread,
                    unlock_tick=unlock,
                    start_ticks=starts,
                    finish_ticks=finishes,
                    kinds=tuple(t.kind for t in tasks),
                    earliest_normal_finish=min(normal_finishes) if normal_finishes else min(finishes),
                )
            )
            unlock = max(finishes)
    return GroundTruth(phases=tuple(truths))


@dataclass(frozen=True)
class GeneratedScenario:
    scenario: Scenario
    truth: GroundTruth


def generate(spec: GenSpec, seed: int) -> GeneratedScenario:
    """Deterministic synthetic scenario with the requested small-job mix."""
    if spec.job_count < 1:
        raise GenerationError("job_count must be >= 1")
    servers = tuple(ResourceVector(tuple(spec.server_capacity)) for _ in range(spec.server_count))
    total_slots = sum(min(cap.amounts) for cap in servers)
    theta = spec.config.theta_fraction()
    small_cap = int(total_slots * theta)  # largest slot demand still classified SD
    if small_cap < 1:
        raise GenerationError(
            f"cluster of {total_slots} slots cannot host small jobs under theta={spec.config.theta}"
        )
    n_small = round(spec.small_fraction * spec.job_count)

    rng = random.Random(seed)
    small_ids = set(rng.sample(range(spec.job_count), n_small)) if n_small else set()

    jobs = []
    for job_id in range(spec.job_count):
        small = job_id in small_ids
        tasks_range = spec.small_tasks if small else spec.large_tasks
        duration_range = spec.small_duration if small else spec.duration
        n_phases = rng.randint(*spec.phases)
        phases = []
        for pi in range(n_phases):
            count = rng.randint(*tasks_range)
            if small:
                count = min(count, small_cap)
            else:
                count = max(count, small_cap + 1)
            base = rng.randint(*duration_range)
            spread = rng.randint(*spec.spread) if count > 1 else 0
            heading = 1 if (count > 2 and base >= 2 and rng.random() < spec.heading_rate) else 0
            trailing = 1 if (count > 2 + heading and rng.random() < spec.trailing_rate) else 0
            demand = ResourceVector(
                tuple(rng.randint(*spec.task_demand) for _ in range(len(spec.server_capacity)))
            )
            if not any(demand.fits_within(cap) for cap in servers):
                raise GenerationError(
                    f"job {job_id} phase {pi}: demand {demand.amounts} exceeds every server"
                )
            phases.append(
                PhaseSpec(
                    phase_index=pi,
                    task_count=count,
                    base_duration=base,
                    demand=demand,
                    start_spread=spread,
                    heading_count=heading,
                    trailing_count=trailing,
                )
            )
        jobs.append(
            JobSpec(job_id=job_id, submit_tick=job_id * spec.submit_interval, phases=tuple(phases))
        )

    # verify the advertised small-job fraction materialized exactly
    realized = sum(
        1
        for job in jobs
        if intrinsic_category(job, total_slots, theta) is Category.SD
    )
    if realized != n_small:
        raise GenerationError(
            f"generator bug: requested {n_small} small jobs, realized {realized}"
        )

    scenario = Scenario(servers=servers, jobs=tuple(jobs), config=spec.config, seed=seed)
    return GeneratedScenario(scenario=scenario, truth=ideal_ground_truth(scenario))
