"""Comparison policies: FCFS single queue and frozen-ratio reservation."""

from __future__ import annotations

from .engine import Grant, JobRuntime, PlacementTracker, Scheduler, SimView
from .reservation import ReservationScheduler
from .workload import Scenario


class FcfsScheduler(Scheduler):
    """Strict first-come-first-serve over one queue of the whole cluster.

    The head of the queue must be able to start its whole eligible wave;
    while it cannot, nothing behind it runs (no backfilling).  Jobs whose
    wave is already running do not block the queue.
    """

    name = "fcfs"

    def bind(self, scenario: Scenario, total_slots: int) -> None:
        self.queue: list[JobRuntime] = []

    def on_job_submitted(self, job: JobRuntime, tick: int) -> None:
        self.queue.append(job)

    def on_heartbeat(self, view: SimView, tick: int) -> list[Grant]:
        self.queue = [j for j in self.queue if not j.finished]
        tracker = PlacementTracker(view)
        grants: list[Grant] = []
        for job in self.queue:
            wave = job.eligible_tasks(tick)
            if not wave:
                continue  # nothing requestable right now; does not block
            checkpoint = tracker.snapshot()
            placed = []
            for task in wave:
                server = tracker.first_fit(task.spec.demand)
                if server is None:
                    break
                placed.append(Grant(task.task_id, server))
            if len(placed) < len(wave):
                tracker.restore(checkpoint)
                break  # head-of-line blocking: nobody may overtake
            grants.extend(placed)
        return grants

    def policy_row(self, tick: int) -> dict | None:
        return {"branch": "fcfs"}


class StaticReservationScheduler(ReservationScheduler):
    """Reservation pools with the ratio frozen at its initial value."""

    def __init__(self, classify_on_total: bool = True):
        super().__init__(dynamic=False, classify_on_total=classify_on_total)


SCHEDULERS = {
    "fcfs": FcfsScheduler,
    "dynamic": ReservationScheduler,
    "static": StaticReservationScheduler,
}


def make_scheduler(name: str) -> Scheduler:
    try:
        return SCHEDULERS[name]()
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {sorted(SCHEDULERS)}") from None
