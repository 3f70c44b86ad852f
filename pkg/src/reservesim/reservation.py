"""Two-pool reservation scheduler with a dynamically adjusted reserve ratio.

Jobs are classified small-demand (SD) or large-demand (LD) at submission;
each category owns a container pool sized by the reserve ratio delta.  Every
heartbeat the ratio is re-balanced from the pending demand of both queues
and the estimator's one-tick-ahead release forecast, then each pool grants
its queue FIFO.  The ratio is kept as an exact fraction to avoid drift;
quotas are floored only when slots are handed out.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .engine import Grant, JobRuntime, PlacementTracker, Scheduler, SimView
from .estimator import ReleaseEstimator
from .workload import Category, Scenario, SchedulerConfig, classify_demand


@dataclass(frozen=True)
class PendingJob:
    job_id: int
    demand: int
    submit_tick: int


@dataclass(frozen=True)
class RatioAdjustment:
    delta: Fraction
    branch: str  # "sd_surplus" | "ld_surplus" | "merge"
    absorbed: tuple[int, ...] = ()  # SD jobs absorbed via merged leftovers


def _sorted_pending(pending: list[PendingJob]) -> list[PendingJob]:
    # ascending demand; ties by earlier submission, then lower id
    return sorted(pending, key=lambda p: (p.demand, p.submit_tick, p.job_id))


def adjust_ratio(
    delta: Fraction,
    total_slots: int,
    sd_pending: list[PendingJob],
    ld_pending: list[PendingJob],
    ac_sd: int,
    ac_ld: int,
    f_sd: int,
    f_ld: int,
    bounds: tuple[Fraction, Fraction],
) -> RatioAdjustment:
    """One re-balancing step of the reserve ratio.

    If a category's current-plus-forecast availability covers its pending
    demand, the surplus is handed to the other side.  When both queues are
    congested, each side greedily serves its cheapest jobs and leftover LD
    capacity is merged into SD, enlarging delta per absorbed job.
    """
    p_sd = sum(p.demand for p in sd_pending)
    p_ld = sum(p.demand for p in ld_pending)
    avail_sd = ac_sd + f_sd
    avail_ld = ac_ld + f_ld

    absorbed: tuple[int, ...] = ()
    if avail_sd >= p_sd:
        delta = delta - Fraction(avail_sd - p_sd, total_slots)
        branch = "sd_surplus"
    elif avail_ld >= p_ld:
        delta = delta + Fraction(avail_ld - p_ld, total_slots)
        branch = "ld_surplus"
    else:
        branch = "merge"
        unserved: list[PendingJob] = []
        for job in _sorted_pending(sd_pending):
            if avail_sd - job.demand > 0:
                avail_sd -= job.demand
            else:
                unserved.append(job)
        for job in _sorted_pending(ld_pending):
            if avail_ld - job.demand > 0:
                avail_ld -= job.demand
        taken = []
        for job in unserved:
            if job.demand < avail_sd + avail_ld:
                avail_ld -= job.demand
                delta = delta + Fraction(job.demand, total_slots)
                taken.append(job.job_id)
            else:
                break
        absorbed = tuple(taken)

    lo, hi = bounds
    delta = min(hi, max(lo, delta))
    return RatioAdjustment(delta=delta, branch=branch, absorbed=absorbed)


class ReservationScheduler(Scheduler):
    """Category pools + FIFO grants; delta adjusted unless frozen.

    ``classify_on_total`` classifies jobs against the idle-cluster container
    count instead of the instantaneous free count; under congestion the
    instantaneous count collapses to zero and would mark every job
    large-demand.
    """

    def __init__(self, dynamic: bool = True, classify_on_total: bool = True):
        self.dynamic = dynamic
        self.classify_on_total = classify_on_total
        self.name = "dynamic" if dynamic else "static"

    def bind(self, scenario: Scenario, total_slots: int) -> None:
        self.config: SchedulerConfig = scenario.config
        self.total_slots = total_slots
        self.delta: Fraction = self.config.delta0_fraction()
        self.bounds = self.config.delta_bounds()
        self.estimator = ReleaseEstimator(self.config)
        self.categories: dict[int, Category] = {}
        self.queues: dict[Category, list[JobRuntime]] = {Category.SD: [], Category.LD: []}
        self.occupied: dict[Category, int] = {Category.SD: 0, Category.LD: 0}
        self._task_category: dict[str, Category] = {}
        self._last_row: dict | None = None
        self._current_view: SimView | None = None

    # -- pool bookkeeping ----------------------------------------------------

    def quota(self, category: Category) -> int:
        sd_quota = int(self.total_slots * self.delta)
        return sd_quota if category is Category.SD else self.total_slots - sd_quota

    def on_job_submitted(self, job: JobRuntime, tick: int) -> None:
        basis = self.total_slots if self.classify_on_total else self._available_now()
        category = classify_demand(job.peak_slot_demand, basis, self.config.theta_fraction())
        self.categories[job.job_id] = category
        self.queues[category].append(job)
        self.estimator.register_job(job.job_id, category)
        for phase in job.phases:
            for task in phase:
                self.estimator.bind_task(task.task_id, job.job_id)
                self._task_category[task.task_id] = category

    def _available_now(self) -> int:
        view = self._current_view
        return view.available_slots if view is not None else self.total_slots

    def on_task_started(self, task_id: str, tick: int) -> None:
        self.estimator.observe_start(task_id, tick)

    def on_task_completed(self, task_id: str, tick: int) -> None:
        self.estimator.observe_completion(task_id, tick)
        self.occupied[self._task_category[task_id]] -= 1

    # -- heartbeat -------------------------------------------------------------

    def _pending(self, category: Category, tick: int) -> list[PendingJob]:
        pending = []
        for job in self.queues[category]:
            remaining = job.ungranted_phase_demand()
            if remaining > 0:
                pending.append(PendingJob(job.job_id, remaining, job.submit_tick))
        return pending

    def on_heartbeat(self, view: SimView, tick: int) -> list[Grant]:
        self._current_view = view
        self.estimator.advance_to(tick)
        self.queues = {
            cat: [j for j in q if not j.finished] for cat, q in self.queues.items()
        }

        available = view.available_slots
        ac_sd = max(0, min(available, self.quota(Category.SD) - self.occupied[Category.SD]))
        ac_ld = available - ac_sd
        forecast = self.estimator.forecast(available, tick + 1, split=(ac_sd, ac_ld))
        f_sd = forecast.sd - ac_sd
        f_ld = forecast.ld - ac_ld

        sd_pending = self._pending(Category.SD, tick)
        ld_pending = self._pending(Category.LD, tick)

        branch = "static"
        if self.dynamic:
            adjustment = adjust_ratio(
                self.delta,
                self.total_slots,
                sd_pending,
                ld_pending,
                ac_sd,
                ac_ld,
                f_sd,
                f_ld,
                self.bounds,
            )
            self.delta = adjustment.delta
            branch = adjustment.branch

        grants = self._grant(view, tick)
        self._last_row = {
            "delta": str(self.delta),
            "quota_sd": self.quota(Category.SD),
            "quota_ld": self.quota(Category.LD),
            "p1": sum(p.demand for p in sd_pending),
            "p2": sum(p.demand for p in ld_pending),
            "f1": f_sd,
            "f2": f_ld,
            "branch": branch,
        }
        return grants

    def _grant(self, view: SimView, tick: int) -> list[Grant]:
        tracker = PlacementTracker(view)
        grants: list[Grant] = []
        loan = 0
        for category in (Category.SD, Category.LD):
            free = max(0, self.quota(category) - self.occupied[category]) + loan
            for job in self.queues[category]:
                if free <= 0:
                    break
                remaining = job.ungranted_phase_demand()
                if remaining == 0 or remaining > free:
                    continue  # admit only jobs whose whole phase wave fits
                for task in job.eligible_tasks(tick):
                    server = tracker.first_fit(task.spec.demand)
                    if server is None:
                        continue
                    grants.append(Grant(task.task_id, server))
                    self.occupied[category] += 1
                    free -= 1
            if category is Category.SD:
                # lend quota the small-demand queue cannot claim right now,
                # so reserved-but-idle slots never wall off large jobs
                queued = sum(j.ungranted_phase_demand() for j in self.queues[category])
                loan = max(0, free - queued)
        return grants

    def policy_row(self, tick: int) -> dict | None:
        return self._last_row
