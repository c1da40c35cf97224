"""Whole-program estimates from barrier point sets, and their validation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySelection, MissingRegionMeasurement, MissingRoi, RegionCountMismatch
from .formatting import format_percent, format_speedup, selected_label, truncate2
from .measurements import METRICS, AggregateStats, MeasurementTable, aggregate
from .selection import BarrierPointSet

ERROR_MODES = ("per-thread", "aggregate")


@dataclass(frozen=True)
class Estimate:
    totals: np.ndarray  # [thread, metric]
    std: np.ndarray  # propagated run-to-run standard deviation


@dataclass(frozen=True)
class ValidationReport:
    rel_errors: np.ndarray  # [thread, metric]; NaN where the actual value is 0
    mean_abs_error: dict[str, float]
    max_std: dict[str, float]  # largest relative std of the estimate among threads
    zero_actual: tuple[tuple[int, str], ...]
    projection_seed: int | None = None
    clustering_seed: int | None = None
    mode: str = "per-thread"

    def error(self, metric: str) -> float:
        return self.mean_abs_error[metric]


@dataclass(frozen=True)
class SpeedupReport:
    selected_fraction: float
    largest_fraction: float
    serial_speedup: float
    parallel_speedup: float


def estimate_totals(bps: BarrierPointSet, region_stats: AggregateStats) -> Estimate:
    """Sum of multiplier x mean counter value over the set, per thread and metric."""
    n = region_stats.n_regions
    for idx in bps.region_indices:
        if not 0 <= idx < n:
            raise MissingRegionMeasurement(idx, n)
    idx = bps.region_indices
    m = bps.multipliers[:, None, None]
    means = region_stats.region_mean[idx]
    stds = region_stats.region_std[idx]
    totals = (m * means).sum(axis=0)
    std = np.sqrt(((m * stds) ** 2).sum(axis=0))
    return Estimate(totals, std)


def _relative(est: np.ndarray, actual: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(actual > 0, np.abs(est - actual) / np.where(actual > 0, actual, 1.0), np.nan)


def error_report(
    estimate: Estimate,
    roi_stats: AggregateStats,
    mode: str = "per-thread",
    bps: BarrierPointSet | None = None,
) -> ValidationReport:
    """Relative error of the estimate against measured ROI means.

    ``per-thread`` averages absolute per-thread errors; ``aggregate`` sums
    threads before comparing. Zero-actual cells are listed and left out of the
    averages.
    """
    if roi_stats.roi_mean is None:
        raise MissingRoi("no ROI measurements to validate against")
    if mode not in ERROR_MODES:
        raise ValueError(f"mode must be one of {ERROR_MODES}")
    actual = roi_stats.roi_mean
    est, std = estimate.totals, estimate.std
    if actual.shape != est.shape:
        raise MissingRoi(f"ROI covers {actual.shape[0]} threads, estimate has {est.shape[0]}")
    if mode == "aggregate":
        actual = actual.sum(axis=0, keepdims=True)
        est = est.sum(axis=0, keepdims=True)
        std = np.sqrt((std**2).sum(axis=0, keepdims=True))

    rel = _relative(est, actual)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_std = std / np.where(actual > 0, actual, np.nan)
    zero = tuple((int(t), METRICS[m]) for t, m in zip(*np.nonzero(~(actual > 0))))
    mean_err, max_std = {}, {}
    for m, name in enumerate(METRICS):
        col = rel[:, m]
        ok = ~np.isnan(col)
        mean_err[name] = float(col[ok].mean()) if ok.any() else float("nan")
        max_std[name] = float(rel_std[ok, m].max()) if ok.any() else float("nan")
    return ValidationReport(
        rel,
        mean_err,
        max_std,
        zero,
        None if bps is None else bps.projection_seed,
        None if bps is None else bps.clustering_seed,
        mode,
    )


def validate(
    bps: BarrierPointSet, measurements: MeasurementTable | AggregateStats, mode: str = "per-thread"
) -> ValidationReport:
    stats = aggregate(measurements) if isinstance(measurements, MeasurementTable) else measurements
    return error_report(estimate_totals(bps, stats), stats, mode, bps)


def cross_validate(
    set_from_a: BarrierPointSet,
    measurements_b: MeasurementTable | AggregateStats,
    roi_b: MeasurementTable | AggregateStats | None = None,
    mode: str = "per-thread",
) -> ValidationReport:
    """Validate a set discovered on one platform against another platform's counters.

    Fails when the target ran a different number of regions: the regions can
    then no longer be matched one to one.
    """
    region_stats = aggregate(measurements_b) if isinstance(measurements_b, MeasurementTable) else measurements_b
    if region_stats.n_regions != set_from_a.n_regions:
        raise RegionCountMismatch(set_from_a.n_regions, region_stats.n_regions)
    if roi_b is None:
        roi_stats = region_stats
    else:
        roi_stats = aggregate(roi_b) if isinstance(roi_b, MeasurementTable) else roi_b
    return error_report(estimate_totals(set_from_a, region_stats), roi_stats, mode, set_from_a)


def speedup_report(bps: BarrierPointSet, weights, total: float | None = None) -> SpeedupReport:
    w = np.asarray(weights, dtype=np.float64)
    total = float(w.sum()) if total is None else float(total)
    chosen = w[bps.region_indices] if len(bps) else np.zeros(0)
    selected = float(chosen.sum())
    if selected <= 0 or total <= 0:
        raise EmptySelection("selected barrier points carry no instructions")
    largest = float(chosen.max())
    return SpeedupReport(selected / total, largest / total, total / selected, total / largest)


def speedup_from_fraction(selected_fraction: float) -> float:
    if selected_fraction <= 0:
        raise EmptySelection("selected fraction must be positive")
    return 1.0 / selected_fraction


@dataclass(frozen=True)
class TableRow:
    workload: str
    configuration: str
    set_id: str
    n_selected: int
    total_regions: int
    errors: dict[str, float]
    largest_fraction: float
    selected_fraction: float
    serial_speedup: float
    parallel_speedup: float

    @property
    def bps_label(self) -> str:
        return selected_label(self.n_selected, self.total_regions)


TABLE_COLUMNS = (
    ["workload", "configuration", "set", "bps_selected"]
    + [f"err_{m}_pct" for m in METRICS]
    + ["largest_bp_pct", "total_selected_pct", "speedup", "parallel_speedup"]
)


def table_report(
    sets: Sequence[BarrierPointSet],
    validations: Sequence[ValidationReport],
    speedups: Sequence[SpeedupReport],
    workload: str = "workload",
    configurations: Sequence[str] | None = None,
    set_ids: Sequence[str] | None = None,
) -> list[TableRow]:
    if not len(sets) == len(validations) == len(speedups):
        raise ValueError("sets, validations and speedups must be aligned")
    rows = []
    for i, (bps, val, sp) in enumerate(zip(sets, validations, speedups)):
        rows.append(
            TableRow(
                workload,
                configurations[i] if configurations else "",
                set_ids[i] if set_ids else str(i),
                len(bps),
                bps.n_regions,
                dict(val.mean_abs_error),
                sp.largest_fraction,
                sp.selected_fraction,
                sp.serial_speedup,
                sp.parallel_speedup,
            )
        )
    return rows


def render_csv(rows: Sequence[TableRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for r in rows:
        writer.writerow(
            [r.workload, r.configuration, r.set_id, r.bps_label]
            + [repr(100.0 * r.errors[m]) for m in METRICS]
            + [repr(100.0 * r.largest_fraction), repr(100.0 * r.selected_fraction)]
            + [repr(r.serial_speedup), repr(r.parallel_speedup)]
        )
    return buf.getvalue()


def render_text(rows: Sequence[TableRow]) -> str:
    head = ["Workload", "Configuration", "Set", "BPs Selected", "Cycles", "Instr", "L1D", "L2D",
            "Largest BP", "Total", "Speedup", "Parallel"]
    body = [
        [r.workload, r.configuration, r.set_id, r.bps_label]
        + [truncate2(100.0 * r.errors[m]) for m in METRICS]
        + [format_percent(r.largest_fraction), format_percent(r.selected_fraction)]
        + [format_speedup(r.serial_speedup), format_speedup(r.parallel_speedup)]
        for r in rows
    ]
    widths = [max(len(str(c)) for c in col) for col in zip(head, *body)]
    lines = []
    for i, row in enumerate([head] + body):
        cells = [c.ljust(w) if j < 4 else c.rjust(w) for j, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def error_dump(labelled: Sequence[tuple[str, str, ValidationReport]]) -> str:
    """CSV of (config, metric, platform, error, stddev), one row per metric per report."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["config", "metric", "platform", "error", "stddev"])
    for config, platform, report in labelled:
        for m in METRICS:
            writer.writerow([config, m, platform, repr(report.mean_abs_error[m]), repr(report.max_std[m])])
    return buf.getvalue()
