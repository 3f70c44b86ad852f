"""Shared builders for small hand-made scenarios."""

import pytest

from reservesim import JobSpec, PhaseSpec, ResourceVector, Scenario, SchedulerConfig


def phase(index=0, tasks=1, duration=5, demand=(1,), spread=0, heading=0, trailing=0, **kw):
    return PhaseSpec(
        phase_index=index,
        task_count=tasks,
        base_duration=duration,
        demand=ResourceVector(tuple(demand)),
        start_spread=spread,
        heading_count=heading,
        trailing_count=trailing,
        **kw,
    )


def job(job_id=0, submit=0, phases=None):
    return JobSpec(job_id=job_id, submit_tick=submit, phases=tuple(phases or [phase()]))


def scenario(jobs, servers=((4,),), config=None, seed=0):
    return Scenario(
        servers=tuple(ResourceVector(tuple(c)) for c in servers),
        jobs=tuple(jobs),
        config=config or SchedulerConfig(),
        seed=seed,
    )


@pytest.fixture
def tiny_scenario():
    """Two single-task jobs on a 4-slot server."""
    return scenario([job(0, 0), job(1, 2, [phase(tasks=2, duration=3)])])
