"""Deterministic discrete-event loop driving one simulation run.

Tick order is fixed: completions (which release capacity) -> job
submissions -> phase unlocks -> scheduler heartbeat -> lease transitions.
Capacity freed by a completion is therefore visible to the scheduler in the
same tick, and a grant with zero transition delays reaches Running in the
tick it was issued.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DeadlockError, SchedulerBugError, TraceError
from .resources import ClusterState, ContainerLease, LeaseState, ResourceVector
from .workload import (
    Category,
    Scenario,
    TaskSpec,
    expand_job,
    intrinsic_category,
)

# ticks without any event while work is pending before declaring deadlock
LIVELOCK_GUARD = 10_000


@dataclass
class Grant:
    task_id: str
    server_id: int


class Scheduler:
    """Behavioral contract the engine drives.

    Subclasses implement the heartbeat; the event hooks default to no-ops.
    """

    name = "abstract"

    def bind(self, scenario: Scenario, total_slots: int) -> None:
        pass

    def on_job_submitted(self, job: "JobRuntime", tick: int) -> None:
        pass

    def on_task_started(self, task_id: str, tick: int) -> None:
        pass

    def on_task_completed(self, task_id: str, tick: int) -> None:
        pass

    def on_heartbeat(self, view: "SimView", tick: int) -> list[Grant]:
        raise NotImplementedError

    def policy_row(self, tick: int) -> dict | None:
        """Optional per-tick policy log merged into the trace."""
        return None


@dataclass
class TaskRuntime:
    spec: TaskSpec
    eligible_tick: int | None = None  # set when the phase unlocks
    granted_tick: int | None = None
    start_tick: int | None = None
    completion_tick: int | None = None
    lease: ContainerLease | None = None

    @property
    def task_id(self) -> str:
        return self.spec.task_id

    @property
    def granted(self) -> bool:
        return self.granted_tick is not None

    def eligible_at(self, tick: int) -> bool:
        return (
            self.eligible_tick is not None
            and self.eligible_tick <= tick
            and not self.granted
        )


@dataclass
class JobRuntime:
    job_id: int
    submit_tick: int
    category: Category
    phases: list[list[TaskRuntime]]
    current_phase: int = 0
    submitted: bool = False

    @property
    def peak_slot_demand(self) -> int:
        return max(len(p) for p in self.phases)

    def phase_tasks(self) -> list[TaskRuntime]:
        if self.current_phase >= len(self.phases):
            return []
        return self.phases[self.current_phase]

    def eligible_tasks(self, tick: int) -> list[TaskRuntime]:
        return [t for t in self.phase_tasks() if t.eligible_at(tick)]

    def ungranted_phase_demand(self) -> int:
        """Remaining container demand of the current phase, eligible or not."""
        return sum(1 for t in self.phase_tasks() if not t.granted)

    @property
    def finished(self) -> bool:
        return all(t.completion_tick is not None for phase in self.phases for t in phase)


class SimView:
    """Read-only window onto engine state handed to schedulers."""

    def __init__(self, engine: "Engine"):
        self._engine = engine

    @property
    def total_slots(self) -> int:
        return self._engine.cluster.total_slots

    @property
    def available_slots(self) -> int:
        return self._engine.cluster.available_slots

    def server_availability(self) -> list[ResourceVector]:
        return [s.available for s in self._engine.cluster.servers]

    def jobs(self) -> list[JobRuntime]:
        return [j for j in self._engine.jobs if j.submitted]

    def job(self, job_id: int) -> JobRuntime:
        return self._engine.jobs_by_id[job_id]

    def task(self, task_id: str) -> TaskRuntime:
        return self._engine.tasks[task_id]


class PlacementTracker:
    """First-fit placement bookkeeping for one heartbeat's grant batch."""

    def __init__(self, view: SimView):
        self._avail = list(view.server_availability())
        self._slots = view.available_slots

    def first_fit(self, demand: ResourceVector) -> int | None:
        if self._slots <= 0:
            return None
        for sid, avail in enumerate(self._avail):
            if demand.fits_within(avail):
                self._avail[sid] = avail - demand
                self._slots -= 1
                return sid
        return None

    def snapshot(self):
        return list(self._avail), self._slots

    def restore(self, state) -> None:
        self._avail, self._slots = list(state[0]), state[1]

    def fits_anywhere(self, demand: ResourceVector) -> bool:
        return self._slots > 0 and any(demand.fits_within(a) for a in self._avail)


# ---------------------------------------------------------------------------
# trace records


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    job_id: int
    phase_index: int
    category: str
    kind: str
    demand: tuple[int, ...]
    server_id: int
    granted_tick: int
    start_tick: int
    duration: int
    completion_tick: int


@dataclass(frozen=True)
class TickRecord:
    tick: int
    available_slots: int
    occupied_sd: int
    occupied_ld: int
    policy: dict | None = None


@dataclass(frozen=True)
class JobRecord:
    job_id: int
    submit_tick: int
    category: str
    first_start: int
    last_completion: int
    waiting: int
    completion_span: int


@dataclass(frozen=True)
class ScheduleTrace:
    scheduler: str
    scenario_digest: str
    seed: int
    total_slots: int
    makespan: int
    work_conservation_misses: int
    tasks: tuple[TaskRecord, ...]
    ticks: tuple[TickRecord, ...]
    jobs: tuple[JobRecord, ...]


class Engine:
    def __init__(self, scenario: Scenario, scheduler: Scheduler):
        self.scenario = scenario
        self.scheduler = scheduler
        self.cluster = ClusterState(list(scenario.servers))
        theta = scenario.config.theta_fraction()
        self.jobs: list[JobRuntime] = []
        self.tasks: dict[str, TaskRuntime] = {}
        for job_spec in scenario.jobs:
            phases = []
            for phase_tasks in expand_job(job_spec):
                runtimes = [TaskRuntime(spec=t) for t in phase_tasks]
                for rt in runtimes:
                    self.tasks[rt.task_id] = rt
                phases.append(runtimes)
            job = JobRuntime(
                job_id=job_spec.job_id,
                submit_tick=job_spec.submit_tick,
                category=intrinsic_category(job_spec, scenario.total_slots, theta),
                phases=phases,
            )
            self.jobs.append(job)
        self.jobs_by_id = {j.job_id: j for j in self.jobs}
        self.view = SimView(self)
        self._completions: dict[int, list[TaskRuntime]] = {}
        self._transitions: dict[int, list[TaskRuntime]] = {}
        self._tick_records: list[TickRecord] = []
        self._work_conservation_misses = 0

    # -- helpers -----------------------------------------------------------

    def _occupied_by_category(self) -> tuple[int, int]:
        sd = ld = 0
        for job in self.jobs:
            active = sum(
                1
                for phase in job.phases
                for t in phase
                if t.lease is not None and t.lease.active
            )
            if job.category is Category.SD:
                sd += active
            else:
                ld += active
        return sd, ld

    def _apply_grants(self, grants: list[Grant], tick: int) -> None:
        delays = self.scenario.config.delays
        for grant in grants:
            task = self.tasks.get(grant.task_id)
            if task is None:
                raise SchedulerBugError(f"tick {tick}: grant for unknown task {grant.task_id}")
            if not task.eligible_at(tick):
                raise SchedulerBugError(
                    f"tick {tick}: grant for ineligible task {grant.task_id}"
                )
            lease = self.cluster.reserve(task.task_id, task.spec.demand, grant.server_id, tick)
            task.lease = lease
            task.granted_tick = tick
            self._transitions.setdefault(tick + delays[0], []).append(task)

    def _advance_transitions(self, tick: int) -> None:
        delays = self.scenario.config.delays
        due = self._transitions.pop(tick, [])
        while due:
            next_due: list[TaskRuntime] = []
            for task in due:
                lease = task.lease
                assert lease is not None
                if lease.state is LeaseState.RESERVED:
                    self.cluster.advance_lease(lease, LeaseState.ALLOCATED, tick)
                    if delays[1] == 0:
                        next_due.append(task)
                    else:
                        self._transitions.setdefault(tick + delays[1], []).append(task)
                elif lease.state is LeaseState.ALLOCATED:
                    self.cluster.advance_lease(lease, LeaseState.ACQUIRED, tick)
                    if delays[2] == 0:
                        next_due.append(task)
                    else:
                        self._transitions.setdefault(tick + delays[2], []).append(task)
                elif lease.state is LeaseState.ACQUIRED:
                    self.cluster.advance_lease(lease, LeaseState.RUNNING, tick)
                    task.start_tick = tick
                    self._completions.setdefault(tick + task.spec.duration, []).append(task)
                    self.scheduler.on_task_started(task.task_id, tick)
            due = next_due

    def _process_completions(self, tick: int) -> None:
        for task in self._completions.pop(tick, []):
            assert task.lease is not None
            self.cluster.advance_lease(task.lease, LeaseState.COMPLETED, tick)
            task.completion_tick = tick
            self.scheduler.on_task_completed(task.task_id, tick)

    def _process_submissions(self, tick: int) -> None:
        for job in self.jobs:
            if not job.submitted and job.submit_tick == tick:
                job.submitted = True
                for task in job.phases[0]:
                    task.eligible_tick = tick + task.spec.eligible_offset
                self.scheduler.on_job_submitted(job, tick)

    def _process_phase_unlocks(self, tick: int) -> None:
        for job in self.jobs:
            if not job.submitted:
                continue
            while job.current_phase < len(job.phases) - 1 and all(
                t.completion_tick is not None for t in job.phases[job.current_phase]
            ):
                job.current_phase += 1
                for task in job.phases[job.current_phase]:
                    task.eligible_tick = tick + task.spec.eligible_offset
            if job.current_phase == len(job.phases) - 1 and job.finished:
                job.current_phase = len(job.phases)

    def _record_tick(self, tick: int) -> None:
        sd, ld = self._occupied_by_category()
        self._tick_records.append(
            TickRecord(
                tick=tick,
                available_slots=self.cluster.available_slots,
                occupied_sd=sd,
                occupied_ld=ld,
                policy=self.scheduler.policy_row(tick),
            )
        )

    def _note_work_conservation(self, tick: int, granted: bool) -> None:
        if granted or self.cluster.available_slots <= 0:
            return
        for job in self.jobs:
            if not job.submitted:
                continue
            for task in job.eligible_tasks(tick):
                if any(s.can_place(task.spec.demand) for s in self.cluster.servers):
                    self._work_conservation_misses += 1
                    return

    # -- main loop ---------------------------------------------------------

    def run(self) -> ScheduleTrace:
        tick = 0
        idle_ticks = 0
        total_tasks = len(self.tasks)
        completed = 0
        makespan = 0
        while True:
            before_completed = sum(
                1 for t in self.tasks.values() if t.completion_tick is not None
            )
            self._process_completions(tick)
            self._process_submissions(tick)
            self._process_phase_unlocks(tick)
            grants = self.scheduler.on_heartbeat(self.view, tick)
            self._apply_grants(grants, tick)
            self._advance_transitions(tick)
            self._record_tick(tick)
            self._note_work_conservation(tick, granted=bool(grants))

            after_completed = sum(
                1 for t in self.tasks.values() if t.completion_tick is not None
            )
            completed = after_completed
            if completed == total_tasks:
                makespan = tick
                break

            progressed = (
                after_completed != before_completed
                or bool(grants)
                or bool(self._transitions)
                or bool(self._completions)
                or any(not j.submitted for j in self.jobs)
            )
            idle_ticks = 0 if progressed else idle_ticks + 1
            if idle_ticks > LIVELOCK_GUARD:
                raise DeadlockError(
                    f"no progress for {LIVELOCK_GUARD} ticks at tick {tick} "
                    f"with {total_tasks - completed} tasks outstanding"
                )
            tick += 1

        self.cluster.check_conservation()
        return self._build_trace(makespan)

    def _build_trace(self, makespan: int) -> ScheduleTrace:
        task_records = []
        for job in self.jobs:
            for phase in job.phases:
                for t in phase:
                    assert t.start_tick is not None and t.completion_tick is not None
                    task_records.append(
                        TaskRecord(
                            task_id=t.task_id,
                            job_id=job.job_id,
                            phase_index=t.spec.phase_index,
                            category=job.category.value,
                            kind=t.spec.kind.value,
                            demand=t.spec.demand.amounts,
                            server_id=t.lease.server_id,
                            granted_tick=t.granted_tick,
                            start_tick=t.start_tick,
                            duration=t.spec.duration,
                            completion_tick=t.completion_tick,
                        )
                    )
        job_records = []
        for job in self.jobs:
            starts = [t.start_tick for phase in job.phases for t in phase]
            ends = [t.completion_tick for phase in job.phases for t in phase]
            first_start = min(starts)
            last_completion = max(ends)
            job_records.append(
                JobRecord(
                    job_id=job.job_id,
                    submit_tick=job.submit_tick,
                    category=job.category.value,
                    first_start=first_start,
                    last_completion=last_completion,
                    waiting=first_start - job.submit_tick,
                    completion_span=last_completion - job.submit_tick,
                )
            )
        return ScheduleTrace(
            scheduler=self.scheduler.name,
            scenario_digest=self.scenario.digest(),
            seed=self.scenario.seed,
            total_slots=self.cluster.total_slots,
            makespan=makespan,
            work_conservation_misses=self._work_conservation_misses,
            tasks=tuple(task_records),
            ticks=tuple(self._tick_records),
            jobs=tuple(job_records),
        )


def run(scenario: Scenario, scheduler: Scheduler) -> ScheduleTrace:
    """Run one simulation; pure function of (scenario, scheduler identity)."""
    scheduler.bind(scenario, scenario.total_slots)
    return Engine(scenario, scheduler).run()


# ---------------------------------------------------------------------------
# trace serialization (JSON lines)


def trace_to_lines(trace: ScheduleTrace) -> list[str]:
    def dump(obj: dict) -> str:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    lines = [
        dump(
            {
                "type": "meta",
                "scheduler": trace.scheduler,
                "scenario": trace.scenario_digest,
                "seed": trace.seed,
                "total_slots": trace.total_slots,
                "makespan": trace.makespan,
                "work_conservation_misses": trace.work_conservation_misses,
            }
        )
    ]
    for rec in trace.jobs:
        lines.append(dump({"type": "job", **rec.__dict__}))
    for rec in trace.tasks:
        d = dict(rec.__dict__)
        d["demand"] = list(d["demand"])
        lines.append(dump({"type": "task", **d}))
    for rec in trace.ticks:
        lines.append(dump({"type": "tick", **rec.__dict__}))
    return lines


def save_trace(trace: ScheduleTrace, path: str | Path) -> None:
    Path(path).write_text("\n".join(trace_to_lines(trace)) + "\n", encoding="utf-8")


def load_trace(path: str | Path) -> ScheduleTrace:
    meta = None
    jobs, tasks, ticks = [], [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        kind = obj.pop("type", None)
        if kind == "meta":
            meta = obj
        elif kind == "job":
            jobs.append(JobRecord(**obj))
        elif kind == "task":
            obj["demand"] = tuple(obj["demand"])
            tasks.append(TaskRecord(**obj))
        elif kind == "tick":
            ticks.append(TickRecord(**obj))
        else:
            raise TraceError(f"unknown trace record type {kind!r}")
    if meta is None:
        raise TraceError("trace has no meta record")
    return ScheduleTrace(
        scheduler=meta["scheduler"],
        scenario_digest=meta["scenario"],
        seed=meta["seed"],
        total_slots=meta["total_slots"],
        makespan=meta["makespan"],
        work_conservation_misses=meta["work_conservation_misses"],
        tasks=tuple(tasks),
        ticks=tuple(ticks),
        jobs=tuple(jobs),
    )
