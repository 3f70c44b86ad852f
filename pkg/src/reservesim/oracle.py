"""Exact small-instance makespan solver and feasibility checking.

The solver does depth-first branch and bound over (task -> server, start)
assignments at integer ticks.  An independent cross-check enumerates serial
schedules (all task permutations x all server assignments, each placed at
its earliest feasible start); for regular objectives such as makespan this
family contains an optimal schedule, so the two must agree on tiny
instances.  The solver is deliberately clairvoyant: it sees every duration
up front, which no online scheduler does, and is reported as a lower bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError
from .workload import (
    Category,
    JobSpec,
    PhaseSpec,
    Scenario,
    SchedulerConfig,
    expand_job,
    intrinsic_category,
)
from .resources import ResourceVector

DEFAULT_NODE_BUDGET = 10_000_000


@dataclass(frozen=True)
class IlpTask:
    task_id: str
    demand: tuple[int, ...]
    duration: int
    release: int = 0
    category: Category = Category.LD


@dataclass(frozen=True)
class IlpInstance:
    capacities: tuple[tuple[int, ...], ...]
    tasks: tuple[IlpTask, ...]
    alpha: Fraction | None = None  # reserve fraction for SD; None disables (3)/(4)
    horizon: int | None = None
    node_budget: int = DEFAULT_NODE_BUDGET

    def effective_horizon(self) -> int:
        serial = max((t.release for t in self.tasks), default=0) + sum(
            t.duration for t in self.tasks
        )
        return serial if self.horizon is None else self.horizon

    @property
    def k(self) -> int:
        return len(self.capacities[0])

    def total_capacity(self) -> tuple[int, ...]:
        return tuple(sum(c[p] for c in self.capacities) for p in range(self.k))


@dataclass(frozen=True)
class IlpSolution:
    assignment: dict[str, tuple[int, int]]  # task -> (server, start)
    makespan: int
    optimal: bool
    nodes: int = 0


class _Budget(Exception):
    pass


class _Usage:
    """Per-tick resource ledger for incremental placement checks."""

    def __init__(self, inst: IlpInstance, horizon: int):
        self.inst = inst
        self.horizon = horizon
        k = inst.k
        self.server = [
            [[0] * k for _ in range(horizon + 1)] for _ in inst.capacities
        ]
        self.by_cat = {
            Category.SD: [[0] * k for _ in range(horizon + 1)],
            Category.LD: [[0] * k for _ in range(horizon + 1)],
        }
        alpha = inst.alpha
        total = inst.total_capacity()
        if alpha is not None:
            self.cat_cap = {
                Category.SD: tuple(alpha * c for c in total),
                Category.LD: tuple((1 - alpha) * c for c in total),
            }
        else:
            self.cat_cap = None

    def fits(self, task: IlpTask, server: int, start: int) -> bool:
        if start < task.release or start + task.duration > self.horizon + 1:
            return False
        cap = self.inst.capacities[server]
        for t in range(start, start + task.duration):
            row = self.server[server][t]
            for p, d in enumerate(task.demand):
                if row[p] + d > cap[p]:
                    return False
            if self.cat_cap is not None:
                crow = self.by_cat[task.category][t]
                ccap = self.cat_cap[task.category]
                for p, d in enumerate(task.demand):
                    if crow[p] + d > ccap[p]:
                        return False
        return True

    def place(self, task: IlpTask, server: int, start: int, sign: int = 1) -> None:
        for t in range(start, start + task.duration):
            row = self.server[server][t]
            crow = self.by_cat[task.category][t]
            for p, d in enumerate(task.demand):
                row[p] += sign * d
                crow[p] += sign * d

    def earliest_start(self, task: IlpTask, server: int, limit: int) -> int | None:
        for start in range(task.release, limit + 1):
            if self.fits(task, server, start):
                return start
        return None


def _serial_schedule(
    inst: IlpInstance, order: list[int], servers: list[int], horizon: int
) -> tuple[dict[str, tuple[int, int]], int] | None:
    """Place tasks in the given order on the given servers, each as early
    as possible.  Returns None when some task cannot fit in the horizon."""
    usage = _Usage(inst, horizon)
    assignment: dict[str, tuple[int, int]] = {}
    makespan = 0
    for idx in order:
        task = inst.tasks[idx]
        server = servers[idx]
        start = usage.earliest_start(task, server, horizon - task.duration)
        if start is None:
            return None
        usage.place(task, server, start)
        assignment[task.task_id] = (server, start)
        makespan = max(makespan, start + task.duration)
    return assignment, makespan


def _greedy_incumbent(inst: IlpInstance, horizon: int) -> tuple[dict, int] | None:
    order = list(range(len(inst.tasks)))
    best = None
    for servers in itertools.product(range(len(inst.capacities)), repeat=len(inst.tasks)):
        result = _serial_schedule(inst, order, list(servers), horizon)
        if result is not None and (best is None or result[1] < best[1]):
            best = result
        if best is not None and len(inst.capacities) > 2:
            break  # one feasible incumbent is enough on larger instances
    return best


def solve_exact(instance: IlpInstance) -> IlpSolution:
    """Provably optimal makespan by branch and bound, or the best incumbent
    with ``optimal=False`` when the node budget runs out."""
    if not instance.tasks:
        return IlpSolution(assignment={}, makespan=0, optimal=True)
    horizon = instance.effective_horizon()
    n = len(instance.tasks)
    m = len(instance.capacities)
    usage = _Usage(instance, horizon)

    seed = _greedy_incumbent(instance, horizon)
    if seed is None:
        raise ConfigurationError("instance infeasible within its horizon")
    best_assignment, best_makespan = dict(seed[0]), seed[1]

    # static lower bound from releases and durations
    tail_bound = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        task = instance.tasks[i]
        tail_bound[i] = max(tail_bound[i + 1], task.release + task.duration)

    nodes = 0
    current: dict[str, tuple[int, int]] = {}

    def descend(i: int, current_max: int) -> None:
        nonlocal nodes, best_assignment, best_makespan
        nodes += 1
        if nodes > instance.node_budget:
            raise _Budget
        if max(current_max, tail_bound[i]) >= best_makespan:
            return
        if i == n:
            best_makespan = current_max
            best_assignment = dict(current)
            return
        task = instance.tasks[i]
        for server in range(m):
            latest = min(horizon, best_makespan - 1) - task.duration
            for start in range(task.release, latest + 1):
                if not usage.fits(task, server, start):
                    continue
                usage.place(task, server, start)
                current[task.task_id] = (server, start)
                descend(i + 1, max(current_max, start + task.duration))
                del current[task.task_id]
                usage.place(task, server, start, sign=-1)

    optimal = True
    try:
        descend(0, 0)
    except _Budget:
        optimal = False
    return IlpSolution(
        assignment=best_assignment, makespan=best_makespan, optimal=optimal, nodes=nodes
    )


def enumerate_optimal(instance: IlpInstance) -> int:
    """Independent exhaustive cross-check over serial schedules.

    Only intended for tiny instances (<= 7 tasks, few servers).
    """
    n = len(instance.tasks)
    if n > 7:
        raise ConfigurationError("enumeration is limited to 7 tasks")
    horizon = instance.effective_horizon()
    m = len(instance.capacities)
    best = None
    for order in itertools.permutations(range(n)):
        for servers in itertools.product(range(m), repeat=n):
            result = _serial_schedule(instance, list(order), list(servers), horizon)
            if result is not None and (best is None or result[1] < best):
                best = result[1]
    if best is None:
        raise ConfigurationError("instance infeasible within its horizon")
    return best


# ---------------------------------------------------------------------------
# feasibility checking


def check_feasibility(
    assignment: dict[str, object],
    instance: IlpInstance,
    alpha: Fraction | None = None,
) -> list[str]:
    """Constraint violations of a (possibly hand-built) solution.

    ``assignment`` maps task id to a (server, start) pair or a sequence of
    them; anything but exactly one placement violates unique assignment.
    Occupancy windows are half-open [start, start + duration): capacity
    released at completion is usable the same tick, matching the engine.
    """
    violations = []
    alpha = instance.alpha if alpha is None else alpha
    tasks = {t.task_id: t for t in instance.tasks}
    placements: dict[str, tuple[int, int]] = {}
    for task_id, value in assignment.items():
        if task_id not in tasks:
            violations.append(f"unknown task {task_id}")
            continue
        pairs = [value] if (isinstance(value, tuple) and len(value) == 2 and isinstance(value[0], int)) else list(value)
        if len(pairs) != 1:
            violations.append(f"constraint(1): task {task_id} assigned {len(pairs)} times")
            continue
        placements[task_id] = tuple(pairs[0])
    for task_id in tasks:
        if task_id not in assignment:
            violations.append(f"constraint(1): task {task_id} unassigned")

    if not placements:
        return violations

    end = max(start + tasks[t].duration for t, (_, start) in placements.items())
    k = instance.k
    total = instance.total_capacity()
    for sigma in range(end):
        per_server = [[0] * k for _ in instance.capacities]
        per_cat = {Category.SD: [0] * k, Category.LD: [0] * k}
        for task_id, (server, start) in placements.items():
            task = tasks[task_id]
            if start <= sigma < start + task.duration:
                for p, d in enumerate(task.demand):
                    per_server[server][p] += d
                    per_cat[task.category][p] += d
        for sid, row in enumerate(per_server):
            for p in range(k):
                if row[p] > instance.capacities[sid][p]:
                    violations.append(
                        f"constraint(2): tick {sigma} server {sid} resource {p}: "
                        f"{row[p]} > {instance.capacities[sid][p]}"
                    )
        if alpha is not None:
            for p in range(k):
                if per_cat[Category.SD][p] > alpha * total[p]:
                    violations.append(
                        f"constraint(3): tick {sigma} resource {p}: SD usage "
                        f"{per_cat[Category.SD][p]} > {alpha} * {total[p]}"
                    )
                if per_cat[Category.LD][p] > (1 - alpha) * total[p]:
                    violations.append(
                        f"constraint(4): tick {sigma} resource {p}: LD usage "
                        f"{per_cat[Category.LD][p]} > {1 - alpha} * {total[p]}"
                    )
    for task_id, (server, start) in placements.items():
        if start < tasks[task_id].release:
            violations.append(f"task {task_id} starts before release {tasks[task_id].release}")
    return violations


def instance_from_scenario(scenario: Scenario, alpha: Fraction | None = None) -> IlpInstance:
    """Relax a scenario into an oracle instance.

    Phase barriers and transition delays are dropped (every task is released
    at its job's submission), so the oracle makespan lower-bounds any
    simulated schedule of the same scenario.
    """
    theta = scenario.config.theta_fraction()
    tasks = []
    for job in scenario.jobs:
        category = intrinsic_category(job, scenario.total_slots, theta)
        for phase_tasks in expand_job(job):
            for t in phase_tasks:
                tasks.append(
                    IlpTask(
                        task_id=t.task_id,
                        demand=t.demand.amounts,
                        duration=t.duration,
                        release=job.submit_tick,
                        category=category,
                    )
                )
    return IlpInstance(
        capacities=tuple(cap.amounts for cap in scenario.servers),
        tasks=tuple(tasks),
        alpha=alpha,
    )


def check_trace(trace, scenario: Scenario, check_reservation: bool = False) -> list[str]:
    """Constraint violations of a finished simulation trace.

    Checks unique assignment (1) and per-server capacity (2) over the whole
    run; with ``check_reservation`` also the per-category caps (3)/(4),
    using the reserve ratio logged at each tick.
    """
    violations = []
    seen: set[str] = set()
    for rec in trace.tasks:
        if rec.task_id in seen:
            violations.append(f"constraint(1): task {rec.task_id} recorded twice")
        seen.add(rec.task_id)

    k = scenario.k
    capacities = [cap.amounts for cap in scenario.servers]
    total = tuple(sum(c[p] for c in capacities) for p in range(k))
    delta_by_tick: dict[int, Fraction] = {}
    merge_ticks: set[int] = set()
    if check_reservation:
        for tick_rec in trace.ticks:
            policy = tick_rec.policy or {}
            if "delta" in policy:
                delta_by_tick[tick_rec.tick] = Fraction(policy["delta"])
            if policy.get("branch") == "merge":
                merge_ticks.add(tick_rec.tick)

    for sigma in range(trace.makespan + 1):
        per_server = [[0] * k for _ in capacities]
        per_cat = {"SD": [0] * k, "LD": [0] * k}
        for rec in trace.tasks:
            # capacity is held from the grant (Reserved) to completion
            if rec.granted_tick <= sigma < rec.completion_tick:
                for p, d in enumerate(rec.demand):
                    per_server[rec.server_id][p] += d
                    per_cat[rec.category][p] += d
        for sid, row in enumerate(per_server):
            for p in range(k):
                if row[p] > capacities[sid][p]:
                    violations.append(
                        f"constraint(2): tick {sigma} server {sid} resource {p}: "
                        f"{row[p]} > {capacities[sid][p]}"
                    )
        alpha = delta_by_tick.get(sigma)
        if alpha is not None and sigma not in merge_ticks:
            for p in range(k):
                if per_cat["SD"][p] > alpha * total[p]:
                    violations.append(
                        f"constraint(3): tick {sigma} resource {p}: SD over reserve"
                    )
                if per_cat["LD"][p] > (1 - alpha) * total[p]:
                    violations.append(
                        f"constraint(4): tick {sigma} resource {p}: LD over reserve"
                    )
    return violations


def check_pool_accounting(trace) -> list[str]:
    """occupied_SD + occupied_LD + free slots must equal the slot total."""
    return [
        f"tick {rec.tick}: {rec.occupied_sd} + {rec.occupied_ld} + "
        f"{rec.available_slots} != {trace.total_slots}"
        for rec in trace.ticks
        if rec.occupied_sd + rec.occupied_ld + rec.available_slots != trace.total_slots
    ]


# ---------------------------------------------------------------------------
# convoy-example reconstruction


@dataclass(frozen=True)
class ConvoyExample:
    scenario: Scenario
    demands: tuple[int, int, int, int]
    durations: tuple[int, int, int, int]
    fcfs_makespan: int
    fcfs_waits: tuple[int, int, int, int]
    reordered_starts: tuple[int, int, int, int]
    reordered_makespan: int
    reordered_waits: tuple[int, int, int, int]
    oracle_makespan: int


_EXAMPLE_SUBMITS = (0, 1, 2, 3)
_EXAMPLE_TARGET_WAITS = (0, 9, 28, 27)
_EXAMPLE_TARGET_MAKESPAN = 40
_EXAMPLE_REORDER_MAKESPAN = 30
_EXAMPLE_REORDER_TOTAL_WAIT = 23  # 5.75 average over four jobs
_EXAMPLE_SLOTS = 6


def _example_scenario(demands, durations) -> Scenario:
    jobs = []
    for i, (d, length) in enumerate(zip(demands, durations)):
        jobs.append(
            JobSpec(
                job_id=i + 1,
                submit_tick=_EXAMPLE_SUBMITS[i],
                phases=(
                    PhaseSpec(
                        phase_index=0,
                        task_count=d,
                        base_duration=length,
                        demand=ResourceVector((1,)),
                    ),
                ),
            )
        )
    config = SchedulerConfig(delays=(0, 0, 0))
    return Scenario(
        servers=(ResourceVector((_EXAMPLE_SLOTS,)),), jobs=tuple(jobs), config=config, seed=0
    )


def _example_fcfs(demands, durations):
    from .baselines import FcfsScheduler
    from .engine import run

    trace = run(_example_scenario(demands, durations), FcfsScheduler())
    waits = tuple(rec.waiting for rec in sorted(trace.jobs, key=lambda r: r.job_id))
    return trace.makespan, waits


def _example_profile_feasible(demands, durations, starts) -> bool:
    end = max(s + l for s, l in zip(starts, durations))
    for sigma in range(end):
        usage = sum(
            d for d, s, l in zip(demands, starts, durations) if s <= sigma < s + l
        )
        if usage > _EXAMPLE_SLOTS:
            return False
    return True


def _example_reorder(demands, durations) -> tuple[int, ...] | None:
    """First (deterministic order) start vector with the target numbers:
    makespan 30, total wait 23, jobs 1&3 and 2&4 overlapping."""
    target_sum = _EXAMPLE_REORDER_TOTAL_WAIT + sum(_EXAMPLE_SUBMITS)
    hi = _EXAMPLE_REORDER_MAKESPAN
    for s1 in range(_EXAMPLE_SUBMITS[0], hi + 1):
        for s2 in range(_EXAMPLE_SUBMITS[1], hi + 1):
            for s3 in range(_EXAMPLE_SUBMITS[2], hi + 1):
                s4 = target_sum - s1 - s2 - s3
                if s4 < _EXAMPLE_SUBMITS[3] or s4 > hi:
                    continue
                starts = (s1, s2, s3, s4)
                if max(s + l for s, l in zip(starts, durations)) != _EXAMPLE_REORDER_MAKESPAN:
                    continue
                if not _example_profile_feasible(demands, durations, starts):
                    continue
                overlap13 = min(s1 + durations[0], s3 + durations[2]) - max(s1, s3)
                overlap24 = min(s2 + durations[1], s4 + durations[3]) - max(s2, s4)
                if overlap13 <= 0 or overlap24 <= 0:
                    continue
                return starts
    return None


def reconstruct_convoy_example() -> ConvoyExample:
    """Search job parameters reproducing the 4-job convoy example.

    Job 1 is pinned to 3 containers for 10 ticks; demands and durations of
    the rest are searched so that strict FCFS gives makespan 40 with waits
    (0, 9, 28, 27) while a reordered, oracle-verified schedule reaches
    makespan 30 at 5.75 average wait.  Deterministic: the first solution in
    search order is emitted.
    """
    d1, l1 = 3, 10
    for d2 in range(1, _EXAMPLE_SLOTS + 1):
        if d1 + d2 <= _EXAMPLE_SLOTS:
            continue  # job 2 must be unable to run beside job 1
        for d3 in range(1, _EXAMPLE_SLOTS + 1):
            if d2 + d3 <= _EXAMPLE_SLOTS or d1 + d3 > _EXAMPLE_SLOTS or d3 + 1 > _EXAMPLE_SLOTS:
                continue  # job 3 blocked behind job 2, but able to pair with job 1
            for d4 in range(1, _EXAMPLE_SLOTS - d3 + 1):
                demands = (d1, d2, d3, d4)
                for l2 in range(1, 41):
                    _, waits = _example_fcfs(demands, (l1, l2, 1, 1))
                    if waits != _EXAMPLE_TARGET_WAITS:
                        continue
                    for l3 in range(1, 41):
                        for l4 in range(1, 41):
                            durations = (l1, l2, l3, l4)
                            makespan, waits = _example_fcfs(demands, durations)
                            if makespan != _EXAMPLE_TARGET_MAKESPAN or waits != _EXAMPLE_TARGET_WAITS:
                                continue
                            starts = _example_reorder(demands, durations)
                            if starts is None:
                                continue
                            instance = IlpInstance(
                                capacities=((_EXAMPLE_SLOTS,),),
                                tasks=tuple(
                                    IlpTask(
                                        task_id=f"job{i + 1}",
                                        demand=(demands[i],),
                                        duration=durations[i],
                                        release=_EXAMPLE_SUBMITS[i],
                                    )
                                    for i in range(4)
                                ),
                            )
                            solved = solve_exact(instance)
                            if not solved.optimal or solved.makespan != _EXAMPLE_REORDER_MAKESPAN:
                                continue
                            reordered_waits = tuple(
                                s - sub for s, sub in zip(starts, _EXAMPLE_SUBMITS)
                            )
                            return ConvoyExample(
                                scenario=_example_scenario(demands, durations),
                                demands=demands,
                                durations=durations,
                                fcfs_makespan=makespan,
                                fcfs_waits=waits,
                                reordered_starts=starts,
                                reordered_makespan=_EXAMPLE_REORDER_MAKESPAN,
                                reordered_waits=reordered_waits,
                                oracle_makespan=solved.makespan,
                            )
    raise ConfigurationError(
        "no job parameters reproduce the target example numbers"
    )
