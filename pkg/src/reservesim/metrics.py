"""Per-run summaries and cross-scheduler comparisons.

Waiting time is first-start minus submission; completion span is
last-completion minus submission.  Medians use the convention of averaging
the two central values on even-sized samples, so a four-job run with waits
(0, 9, 27, 28) reports a median wait of 18.0.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from statistics import mean, median

from .engine import ScheduleTrace
from .errors import TraceError

CSV_COLUMNS = (
    "scheduler",
    "scenario",
    "seed",
    "makespan",
    "avg_wait",
    "median_wait",
    "avg_completion",
    "median_completion",
    "sd_avg_completion",
    "ld_avg_completion",
)


@dataclass(frozen=True)
class RunSummary:
    scheduler: str
    scenario_digest: str
    seed: int
    makespan: int
    job_count: int
    avg_wait: float
    median_wait: float
    avg_completion: float
    median_completion: float
    sd_avg_wait: float | None
    ld_avg_wait: float | None
    sd_avg_completion: float | None
    ld_avg_completion: float | None
    work_conservation_misses: int

    def csv_row(self) -> str:
        def fmt(value) -> str:
            if value is None:
                return ""
            if isinstance(value, float):
                return f"{value:.4f}"
            return str(value)

        return ",".join(
            fmt(v)
            for v in (
                self.scheduler,
                self.scenario_digest,
                self.seed,
                self.makespan,
                self.avg_wait,
                self.median_wait,
                self.avg_completion,
                self.median_completion,
                self.sd_avg_completion,
                self.ld_avg_completion,
            )
        )


def summarize(trace: ScheduleTrace) -> RunSummary:
    """Aggregate a finished trace; refuses traces with unfinished jobs."""
    if not trace.jobs:
        raise TraceError("trace has no job records")
    for rec in trace.jobs:
        if rec.last_completion is None or rec.first_start is None:
            raise TraceError(f"job {rec.job_id} did not complete")

    waits = [rec.waiting for rec in trace.jobs]
    spans = [rec.completion_span for rec in trace.jobs]
    sd = [rec for rec in trace.jobs if rec.category == "SD"]
    ld = [rec for rec in trace.jobs if rec.category == "LD"]
    return RunSummary(
        scheduler=trace.scheduler,
        scenario_digest=trace.scenario_digest,
        seed=trace.seed,
        makespan=trace.makespan,
        job_count=len(trace.jobs),
        avg_wait=mean(waits),
        median_wait=float(median(waits)),
        avg_completion=mean(spans),
        median_completion=float(median(spans)),
        sd_avg_wait=mean(r.waiting for r in sd) if sd else None,
        ld_avg_wait=mean(r.waiting for r in ld) if ld else None,
        sd_avg_completion=mean(r.completion_span for r in sd) if sd else None,
        ld_avg_completion=mean(r.completion_span for r in ld) if ld else None,
        work_conservation_misses=trace.work_conservation_misses,
    )


@dataclass(frozen=True)
class ComparisonRow:
    baseline: str
    candidate: str
    metric: str
    baseline_value: float
    candidate_value: float

    @property
    def delta(self) -> float:
        return self.candidate_value - self.baseline_value

    @property
    def reduction_pct(self) -> float | None:
        if self.baseline_value == 0:
            return None
        return 100.0 * (self.baseline_value - self.candidate_value) / self.baseline_value


_COMPARE_METRICS = (
    ("avg_wait", lambda s: s.avg_wait),
    ("median_wait", lambda s: s.median_wait),
    ("avg_completion", lambda s: s.avg_completion),
    ("median_completion", lambda s: s.median_completion),
    ("sd_avg_completion", lambda s: s.sd_avg_completion),
    ("ld_avg_completion", lambda s: s.ld_avg_completion),
    ("makespan", lambda s: float(s.makespan)),
)


def compare(summaries: list[RunSummary]) -> list[ComparisonRow]:
    """Pairwise metric rows for runs of the same scenario.

    The first summary is the baseline; every other scheduler is compared
    against it.  Mixing scenarios is a caller bug and raises.
    """
    if len(summaries) < 2:
        raise TraceError("comparison needs at least two runs")
    digests = {s.scenario_digest for s in summaries}
    if len(digests) != 1:
        raise TraceError(f"runs cover different scenarios: {sorted(digests)}")
    baseline = summaries[0]
    rows = []
    for candidate in summaries[1:]:
        for name, getter in _COMPARE_METRICS:
            b, c = getter(baseline), getter(candidate)
            if b is None or c is None:
                continue
            rows.append(
                ComparisonRow(
                    baseline=baseline.scheduler,
                    candidate=candidate.scheduler,
                    metric=name,
                    baseline_value=b,
                    candidate_value=c,
                )
            )
    return rows


def summaries_to_csv(summaries: list[RunSummary]) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for summary in summaries:
        out.write(summary.csv_row() + "\n")
    return out.getvalue()


def comparison_table(rows: list[ComparisonRow]) -> str:
    """Aligned text table of comparison rows."""
    header = ("metric", "baseline", "candidate", "base", "cand", "delta", "reduction%")
    body = []
    for row in rows:
        pct = "" if row.reduction_pct is None else f"{row.reduction_pct:+.1f}"
        body.append(
            (
                row.metric,
                row.baseline,
                row.candidate,
                f"{row.baseline_value:.2f}",
                f"{row.candidate_value:.2f}",
                f"{row.delta:+.2f}",
                pct,
            )
        )
    widths = [
        max(len(header[i]), max((len(r[i]) for r in body), default=0))
        for i in range(len(header))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for r in body:
        lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(r)))
    return "\n".join(lines)


def per_job_csv(trace: ScheduleTrace) -> str:
    """Per-job rows suitable for grouped-bar plotting."""
    out = io.StringIO()
    out.write("scheduler,job_id,category,submit,waiting,completion_span\n")
    for rec in sorted(trace.jobs, key=lambda r: r.job_id):
        out.write(
            f"{trace.scheduler},{rec.job_id},{rec.category},{rec.submit_tick},"
            f"{rec.waiting},{rec.completion_span}\n"
        )
    return out.getvalue()
