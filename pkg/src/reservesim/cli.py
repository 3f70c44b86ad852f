"""Command-line front end: scenario generation, runs, sweeps, oracle checks,
and report emission.

Exit codes: 0 success, 1 usage error (bad flags, missing/unreadable files),
2 simulation invariant breach.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import glob
import json
import sys
from pathlib import Path

from . import __version__
from .baselines import SCHEDULERS, make_scheduler
from .engine import load_trace, run, save_trace
from .errors import ReserveSimError, SchedulerBugError, LifecycleError
from .metrics import (
    compare,
    comparison_table,
    per_job_csv,
    summaries_to_csv,
    summarize,
)
from .oracle import (
    check_trace,
    enumerate_optimal,
    instance_from_scenario,
    reconstruct_convoy_example,
    solve_exact,
)
from .workload import (
    GenSpec,
    SchedulerConfig,
    generate,
    load_scenario,
    save_scenario,
)

_CONFIG_FLAGS = (
    ("--ts", "ts", int),
    ("--te", "te", int),
    ("--pw", "pw", int),
    ("--delta0", "delta0", float),
    ("--theta", "theta", float),
    ("--delta-min", "delta_min", float),
    ("--delta-max", "delta_max", float),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for flag, dest, kind in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=dest, type=kind, default=None)


def _apply_config_overrides(config: SchedulerConfig, args) -> SchedulerConfig:
    overrides = {
        dest: getattr(args, dest)
        for _, dest, _ in _CONFIG_FLAGS
        if getattr(args, dest, None) is not None
    }
    if not overrides:
        return config
    fields = {
        name: getattr(config, name)
        for name in (
            "ts",
            "te",
            "pw",
            "delta0",
            "theta",
            "delta_min",
            "delta_max",
            "delays",
        )
    }
    fields.update(overrides)
    return SchedulerConfig(**fields)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reservesim",
        description="Reservation-based cluster scheduling simulator.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic scenario file")
    p_gen.add_argument("output", help="scenario JSON path to write")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--jobs", type=int, default=20)
    p_gen.add_argument("--small-fraction", type=float, default=0.3)
    p_gen.add_argument("--submit-interval", type=int, default=5)
    p_gen.add_argument("--servers", type=int, default=2)
    p_gen.add_argument("--capacity", type=int, default=10)
    _add_config_flags(p_gen)

    p_run = sub.add_parser("run", help="simulate one scenario with one scheduler")
    p_run.add_argument("scenario", help="scenario JSON path")
    p_run.add_argument("--scheduler", choices=sorted(SCHEDULERS), default="dynamic")
    p_run.add_argument("--trace", help="write the JSON-lines trace here")
    p_run.add_argument("--summary-csv", help="write a one-row summary CSV here")
    _add_config_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario glob across schedulers")
    p_sweep.add_argument("pattern", help="glob of scenario JSON files")
    p_sweep.add_argument(
        "--schedulers",
        default="fcfs,dynamic",
        help="comma-separated scheduler names (default: fcfs,dynamic)",
    )
    p_sweep.add_argument("--output", help="summary CSV path (default: stdout)")
    p_sweep.add_argument("--jobs", type=int, default=None, dest="workers",
                         help="parallel worker count")

    p_oracle = sub.add_parser("oracle", help="exact solver and trace checking")
    oracle_sub = p_oracle.add_subparsers(dest="oracle_command", required=True)
    p_solve = oracle_sub.add_parser("solve", help="optimal makespan of a scenario")
    p_solve.add_argument("scenario")
    p_solve.add_argument("--enumerate", action="store_true",
                         help="cross-check with exhaustive enumeration")
    p_check = oracle_sub.add_parser("check", help="feasibility-check a trace")
    p_check.add_argument("scenario")
    p_check.add_argument("trace")
    p_check.add_argument("--reservation", action="store_true",
                         help="also check the per-category reserve caps")
    p_example = oracle_sub.add_parser(
        "example", help="reconstruct the 4-job convoy example scenario"
    )
    p_example.add_argument("--output", help="write the reconstructed scenario here")

    p_report = sub.add_parser("report", help="compare traces of one scenario")
    p_report.add_argument("traces", nargs="+", help="trace files; first is baseline")
    p_report.add_argument("--csv", help="write the comparison CSV here")
    p_report.add_argument(
        "--plot-data-dir", help="write per-job grouped-bar CSVs into this directory"
    )
    return parser


def _cmd_gen(args) -> int:
    config = _apply_config_overrides(SchedulerConfig(), args)
    spec = GenSpec(
        job_count=args.jobs,
        small_fraction=args.small_fraction,
        submit_interval=args.submit_interval,
        server_count=args.servers,
        server_capacity=(args.capacity, args.capacity),
        config=config,
    )
    generated = generate(spec, args.seed)
    save_scenario(generated.scenario, args.output)
    print(f"wrote {args.output} ({len(generated.scenario.jobs)} jobs, "
          f"digest {generated.scenario.digest()})")
    return 0


def _load_scenario_arg(path: str, args=None):
    scenario = load_scenario(path)
    if args is not None:
        config = _apply_config_overrides(scenario.config, args)
        if config is not scenario.config:
            scenario = scenario.with_config(config)
    return scenario


def _cmd_run(args) -> int:
    scenario = _load_scenario_arg(args.scenario, args)
    trace = run(scenario, make_scheduler(args.scheduler))
    summary = summarize(trace)
    if args.trace:
        save_trace(trace, args.trace)
    if args.summary_csv:
        Path(args.summary_csv).write_text(summaries_to_csv([summary]))
    print(f"scheduler={summary.scheduler} makespan={summary.makespan} "
          f"avg_wait={summary.avg_wait:.2f} avg_completion={summary.avg_completion:.2f}")
    return 0


def _sweep_one(path: str, scheduler_name: str):
    trace = run(load_scenario(path), make_scheduler(scheduler_name))
    return summarize(trace)


def _cmd_sweep(args) -> int:
    paths = sorted(glob.glob(args.pattern))
    if not paths:
        raise FileNotFoundError(f"no scenarios match {args.pattern!r}")
    names = [n.strip() for n in args.schedulers.split(",") if n.strip()]
    for name in names:
        make_scheduler(name)  # validate up front
    work = [(path, name) for path in paths for name in names]
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.workers) as pool:
        summaries = list(pool.map(lambda w: _sweep_one(*w), work))
    summaries.sort(key=lambda s: (s.scenario_digest, s.scheduler, s.seed))
    csv_text = summaries_to_csv(summaries)
    if args.output:
        Path(args.output).write_text(csv_text)
        print(f"wrote {args.output} ({len(summaries)} rows)")
    else:
        print(csv_text, end="")
    return 0


def _cmd_oracle(args) -> int:
    if args.oracle_command == "solve":
        scenario = _load_scenario_arg(args.scenario)
        instance = instance_from_scenario(scenario)
        solution = solve_exact(instance)
        status = "optimal" if solution.optimal else "incumbent (budget exhausted)"
        print(f"makespan={solution.makespan} status={status} nodes={solution.nodes}")
        if args.enumerate:
            brute = enumerate_optimal(instance)
            agree = "agree" if brute == solution.makespan else "DISAGREE"
            print(f"enumeration={brute} ({agree})")
            if brute != solution.makespan:
                return 2
        return 0
    if args.oracle_command == "check":
        scenario = _load_scenario_arg(args.scenario)
        trace = load_trace(args.trace)
        violations = check_trace(trace, scenario, check_reservation=args.reservation)
        if violations:
            for line in violations:
                print(line)
            return 2
        print("feasible")
        return 0
    result = reconstruct_convoy_example()
    if args.output:
        save_scenario(result.scenario, args.output)
    print(f"demands={result.demands} durations={result.durations}")
    print(f"fcfs: makespan={result.fcfs_makespan} waits={result.fcfs_waits}")
    print(f"reordered: makespan={result.reordered_makespan} "
          f"starts={result.reordered_starts} waits={result.reordered_waits}")
    print(f"oracle optimum={result.oracle_makespan}")
    return 0


def _cmd_report(args) -> int:
    traces = [load_trace(path) for path in args.traces]
    summaries = [summarize(t) for t in traces]
    rows = compare(summaries)
    print(comparison_table(rows))
    if args.csv:
        lines = ["baseline,candidate,metric,baseline_value,candidate_value,delta,reduction_pct"]
        for row in rows:
            pct = "" if row.reduction_pct is None else f"{row.reduction_pct:.4f}"
            lines.append(
                f"{row.baseline},{row.candidate},{row.metric},"
                f"{row.baseline_value:.4f},{row.candidate_value:.4f},"
                f"{row.delta:.4f},{pct}"
            )
        Path(args.csv).write_text("\n".join(lines) + "\n")
    if args.plot_data_dir:
        out_dir = Path(args.plot_data_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for trace in traces:
            (out_dir / f"per_job_{trace.scheduler}.csv").write_text(per_job_csv(trace))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return 0 if exc.code in (0, None) else 1
    handlers = {
        "gen": _cmd_gen,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "oracle": _cmd_oracle,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (SchedulerBugError, LifecycleError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 2
    except (ReserveSimError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
