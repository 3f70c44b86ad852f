"""Exact solver, enumeration cross-check, and feasibility checking."""

import random
from fractions import Fraction

import pytest

from reservesim import (
    IlpInstance,
    IlpTask,
    check_feasibility,
    check_trace,
    enumerate_optimal,
    instance_from_scenario,
    make_scheduler,
    run,
    solve_exact,
)
from reservesim.workload import Category

from conftest import job, phase, scenario


def simple_instance(durations=(3, 3), caps=((1,),), releases=None):
    releases = releases or [0] * len(durations)
    tasks = tuple(
        IlpTask(f"t{i}", (1,), d, r) for i, (d, r) in enumerate(zip(durations, releases))
    )
    return IlpInstance(capacities=caps, tasks=tasks)


class TestSolver:
    def test_serializes_on_one_slot(self):
        sol = solve_exact(simple_instance((3, 3)))
        assert sol.optimal and sol.makespan == 6

    def test_parallel_on_two_slots(self):
        sol = solve_exact(simple_instance((3, 3), caps=((2,),)))
        assert sol.makespan == 3

    def test_respects_releases(self):
        sol = solve_exact(simple_instance((2, 2), caps=((2,),), releases=[0, 5]))
        assert sol.makespan == 7

    def test_empty_instance(self):
        sol = solve_exact(IlpInstance(capacities=((1,),), tasks=()))
        assert sol.makespan == 0 and sol.optimal

    def test_budget_exhaustion_returns_incumbent(self):
        inst = IlpInstance(
            capacities=((2,), (2,)),
            tasks=tuple(IlpTask(f"t{i}", (1,), 3) for i in range(6)),
            node_budget=10,
        )
        sol = solve_exact(inst)
        assert not sol.optimal
        assert sol.makespan >= 5  # still a feasible schedule length

    def test_category_caps_serialize_same_category(self):
        # two slots but a 50% per-category cap: two SD unit tasks cannot
        # overlap even though the server could host both
        inst = IlpInstance(
            capacities=((2,),),
            tasks=(
                IlpTask("a", (1,), 3, 0, Category.SD),
                IlpTask("b", (1,), 3, 0, Category.SD),
            ),
            alpha=Fraction(1, 2),
        )
        assert solve_exact(inst).makespan == 6

    def test_deterministic_assignment(self):
        inst = simple_instance((2, 2, 2), caps=((1,), (1,)))
        assert solve_exact(inst).assignment == solve_exact(inst).assignment


class TestEnumerationAgreement:
    def test_agrees_on_random_instances(self):
        rng = random.Random(11)
        for _ in range(20):
            caps = tuple(
                tuple(rng.randint(1, 3) for _ in range(rng.randint(1, 2)))
                for _ in range(rng.randint(1, 2))
            )
            k = len(caps[0])
            caps = tuple(c[:k] if len(c) >= k else c + (1,) * (k - len(c)) for c in caps)
            floor = min(min(c) for c in caps)
            tasks = tuple(
                IlpTask(
                    f"t{i}",
                    tuple(rng.randint(1, floor) for _ in range(k)),
                    rng.randint(1, 4),
                    rng.randint(0, 3),
                )
                for i in range(rng.randint(1, 5))
            )
            inst = IlpInstance(capacities=caps, tasks=tasks, horizon=25)
            assert solve_exact(inst).makespan == enumerate_optimal(inst)

    def test_enumeration_rejects_large_instances(self):
        inst = simple_instance(tuple([1] * 8), caps=((8,),))
        with pytest.raises(Exception):
            enumerate_optimal(inst)


class TestFeasibilityChecker:
    def test_valid_solution_clean(self):
        inst = simple_instance((3, 3), caps=((2,),))
        sol = solve_exact(inst)
        assert check_feasibility(sol.assignment, inst) == []

    def test_double_assignment_violates_uniqueness(self):
        inst = simple_instance((3,), caps=((2,),))
        violations = check_feasibility({"t0": [(0, 0), (0, 1)]}, inst)
        assert any("constraint(1)" in v for v in violations)

    def test_missing_task_flagged(self):
        inst = simple_instance((3, 3), caps=((2,),))
        violations = check_feasibility({"t0": (0, 0)}, inst)
        assert any("t1" in v for v in violations)

    def test_capacity_overflow_flagged(self):
        inst = simple_instance((3, 3), caps=((1,),))
        violations = check_feasibility({"t0": (0, 0), "t1": (0, 0)}, inst)
        assert any("constraint(2)" in v for v in violations)

    def test_half_open_windows_allow_handover(self):
        # t1 starts the tick t0 completes on a single slot: legal
        inst = simple_instance((3, 3), caps=((1,),))
        assert check_feasibility({"t0": (0, 0), "t1": (0, 3)}, inst) == []

    def test_category_cap_violation(self):
        inst = IlpInstance(
            capacities=((2,),),
            tasks=(
                IlpTask("a", (1,), 3, 0, Category.SD),
                IlpTask("b", (1,), 3, 0, Category.SD),
            ),
            alpha=Fraction(1, 2),
        )
        violations = check_feasibility({"a": (0, 0), "b": (0, 0)}, inst)
        assert any("constraint(3)" in v for v in violations)


class TestTraceChecking:
    def test_engine_traces_are_feasible(self, tiny_scenario):
        for name in ("fcfs", "dynamic", "static"):
            trace = run(tiny_scenario, make_scheduler(name))
            assert check_trace(trace, tiny_scenario) == []

    def test_relaxed_instance_lower_bounds_simulation(self):
        sc = scenario(
            [job(0, 0, [phase(tasks=3, duration=6)]), job(1, 2, [phase(tasks=2, duration=4)])],
            servers=((3,),),
        )
        bound = solve_exact(instance_from_scenario(sc)).makespan
        for name in ("fcfs", "dynamic"):
            assert bound <= run(sc, make_scheduler(name)).makespan
