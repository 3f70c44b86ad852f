"""Online learning of per-phase container release patterns.

Two window detectors drive the model.  A phase is considered started once
more than ``ts`` of its tasks entered Running within the last ``pw`` ticks,
and considered fully started (its start spread known) once no new task
started for a whole window.  Symmetrically, release onset is declared once
more than ``te`` tasks completed within a window -- which filters isolated
early (heading) finishers -- and tasks still running after completions
plateau are treated as trailing and accounted to the next phase.

The learned quantities feed a per-phase linear release ramp which, summed
over jobs and added to the currently free containers, forecasts system
availability at a future tick.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .workload import Category, SchedulerConfig


def _count_in_window(ticks: list[int], t: int, pw: int) -> int:
    """Events with tick in (t - pw, t]; the list must be sorted."""
    return bisect_right(ticks, t) - bisect_right(ticks, t - pw)


@dataclass
class PhaseObservation:
    """Learned quantities for one detected phase of one job."""

    index: int
    containers: int = 0
    started: bool = False
    ended: bool = False
    ps_first: int | None = None
    ps_last: int | None = None
    spread: int | None = None
    gamma: int | None = None
    start_ticks: list[int] = field(default_factory=list)
    completion_ticks: list[int] = field(default_factory=list)
    running: set[str] = field(default_factory=set)

    def release_at(self, t: int) -> int:
        """Cumulative containers predicted released by this phase at time t.

        The ramp is cumulative and saturates at the phase's container count;
        a zero spread degenerates to a step release at the onset.
        """
        if self.gamma is None:
            return 0  # unprofiled phase: forecast unavailable, treated as 0
        spread = self.spread or 0
        if spread == 0:
            return self.containers if t >= self.gamma else 0
        if t <= self.gamma:
            return 0
        released = (t - self.gamma) * self.containers // spread
        return min(self.containers, released)


class JobEstimate:
    """Per-job observation state: start/finish times and phase patterns."""

    def __init__(self, job_id: int, config: SchedulerConfig, category: Category | None = None):
        self.job_id = job_id
        self.config = config
        self.category = category
        self.alpha: int | None = None
        self.beta: int | None = None
        self.phases: list[PhaseObservation] = []
        self.start_index = 0
        self._task_phase: dict[str, int] = {}

    def phase(self, index: int) -> PhaseObservation:
        while len(self.phases) <= index:
            self.phases.append(PhaseObservation(index=len(self.phases)))
        return self.phases[index]

    @property
    def running_count(self) -> int:
        return sum(len(p.running) for p in self.phases)

    def observe_start(self, task_id: str, t: int) -> None:
        if self.alpha is None:
            self.alpha = t
        self.beta = None  # job active again
        obs = self.phase(self.start_index)
        obs.containers += 1
        obs.start_ticks.append(t)
        obs.running.add(task_id)
        self._task_phase[task_id] = obs.index

    def observe_completion(self, task_id: str, t: int) -> None:
        index = self._task_phase.get(task_id)
        if index is None:
            return
        obs = self.phases[index]
        obs.completion_ticks.append(t)
        obs.running.discard(task_id)
        if self.running_count == 0:
            self.beta = t

    def evaluate_windows(self, t: int) -> None:
        """Run both window detectors at tick t."""
        ts, te, pw = self.config.ts, self.config.te, self.config.pw

        obs = self.phase(self.start_index)
        started_in_window = _count_in_window(sorted(obs.start_ticks), t, pw)
        if not obs.started and started_in_window > ts:
            obs.started = True
            obs.ps_first = min(obs.start_ticks)
        elif obs.started and obs.ps_first is not None and started_in_window == 0:
            if obs.spread is None:
                obs.ps_last = max(obs.start_ticks)
                obs.spread = obs.ps_last - obs.ps_first
                self.start_index += 1

        for obs in list(self.phases):
            completions = sorted(obs.completion_ticks)
            completed_in_window = _count_in_window(completions, t, pw)
            if not obs.ended and completed_in_window > te:
                obs.ended = True
                lo = bisect_right(completions, t - pw)
                obs.gamma = completions[lo]  # earliest finish inside the window
            elif obs.gamma is not None and completed_in_window == 0 and obs.running:
                self._roll_trailing(obs)

    def _roll_trailing(self, obs: PhaseObservation) -> None:
        """Tasks still running after the completion plateau belong to data
        skew; charge their containers to the next phase's release pool."""
        nxt = self.phase(obs.index + 1)
        movers = sorted(obs.running)
        for task_id in movers:
            obs.running.discard(task_id)
            obs.containers -= 1
            nxt.running.add(task_id)
            nxt.containers += 1
            self._task_phase[task_id] = nxt.index
        if self.start_index <= obs.index:
            self.start_index = obs.index + 1

    def release_at(self, t: int) -> int:
        """Cumulative container releases forecast by time t; zero before the
        job starts and after it has finished."""
        if self.alpha is None or t < self.alpha:
            return 0
        if self.beta is not None and t > self.beta:
            return 0
        return sum(p.release_at(t) for p in self.phases)


@dataclass(frozen=True)
class AvailabilityForecast:
    total: int
    sd: int
    ld: int


class ReleaseEstimator:
    """Container-release model over all jobs, fed by lifecycle events."""

    def __init__(self, config: SchedulerConfig):
        self.config = config
        self.jobs: dict[int, JobEstimate] = {}
        self._task_job: dict[int | str, int] = {}
        self.now = -1
        self.unknown_events = 0

    def register_job(self, job_id: int, category: Category | None = None) -> JobEstimate:
        est = self.jobs.get(job_id)
        if est is None:
            est = JobEstimate(job_id, self.config, category)
            self.jobs[job_id] = est
        elif category is not None:
            est.category = category
        return est

    def bind_task(self, task_id: str, job_id: int) -> None:
        self._task_job[task_id] = job_id

    def observe_start(self, task_id: str, t: int) -> None:
        job_id = self._task_job.get(task_id)
        if job_id is None or job_id not in self.jobs:
            self.unknown_events += 1
            return
        self.jobs[job_id].observe_start(task_id, t)

    def observe_completion(self, task_id: str, t: int) -> None:
        job_id = self._task_job.get(task_id)
        if job_id is None or job_id not in self.jobs:
            self.unknown_events += 1
            return
        self.jobs[job_id].observe_completion(task_id, t)

    def advance_to(self, t: int) -> None:
        """Evaluate the window detectors for every tick up to t."""
        while self.now < t:
            self.now += 1
            for est in self.jobs.values():
                est.evaluate_windows(self.now)

    def incremental_release(self, job: JobEstimate, t: int) -> int:
        """Containers the model expects the job to return in (now, t]."""
        return max(0, job.release_at(t) - job.release_at(self.now))

    def forecast(self, available: int, t: int, split: tuple[int, int] | None = None) -> AvailabilityForecast:
        """System availability F(t) = free containers + predicted releases.

        ``split`` partitions the currently free containers between the two
        category pools; without it everything lands on the SD side of the
        breakdown and only the total is meaningful.
        """
        ac_sd, ac_ld = split if split is not None else (available, 0)
        rel_sd = rel_ld = 0
        for job in self.jobs.values():
            inc = self.incremental_release(job, t)
            if job.category is Category.LD:
                rel_ld += inc
            else:
                rel_sd += inc
        return AvailabilityForecast(
            total=available + rel_sd + rel_ld,
            sd=ac_sd + rel_sd,
            ld=ac_ld + rel_ld,
        )


# ---------------------------------------------------------------------------
# trace replay


@dataclass(frozen=True)
class ReplaySnapshot:
    tick: int
    available_slots: int
    forecast: AvailabilityForecast
    # True when the forecast at this tick is testable: every phase that still
    # has running tasks has its onset and spread learned, and no new task
    # starts (grants, which a release model does not predict) fall inside
    # the forecast window.
    settled: bool = False


def replay_trace(trace, config: SchedulerConfig, horizon: int | None = None) -> tuple[ReleaseEstimator, list[ReplaySnapshot]]:
    """Feed a finished trace's events through a fresh estimator.

    Returns the final estimator state plus, per tick, the availability
    forecast at tick + horizon (horizon defaults to the phase window).
    """
    horizon = config.pw if horizon is None else horizon
    est = ReleaseEstimator(config)
    categories = {job.job_id: Category(job.category) for job in trace.jobs}
    for job in trace.jobs:
        est.register_job(job.job_id, categories[job.job_id])
    starts: dict[int, list[str]] = {}
    completions: dict[int, list[str]] = {}
    for task in trace.tasks:
        est.bind_task(task.task_id, task.job_id)
        starts.setdefault(task.start_tick, []).append(task.task_id)
        completions.setdefault(task.completion_tick, []).append(task.task_id)

    available = {rec.tick: rec.available_slots for rec in trace.ticks}
    start_ticks = sorted(starts)
    snapshots = []
    for tick in range(trace.makespan + 1):
        for task_id in sorted(completions.get(tick, [])):
            est.observe_completion(task_id, tick)
        for task_id in sorted(starts.get(tick, [])):
            est.observe_start(task_id, tick)
        est.advance_to(tick)
        profiled = all(
            obs.gamma is not None and obs.spread is not None
            for job in est.jobs.values()
            for obs in job.phases
            if obs.running
        )
        quiet = not any(tick < s <= tick + horizon for s in start_ticks)
        snapshots.append(
            ReplaySnapshot(
                tick=tick,
                available_slots=available[tick],
                forecast=est.forecast(available[tick], tick + horizon),
                settled=profiled and quiet,
            )
        )
    return est, snapshots
