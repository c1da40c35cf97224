"""Per-run counter tables, run aggregation, variability and overhead reports.

Counter CSV header: ``run,scope,thread,cycles,instructions,l1d_misses,l2d_misses``
where ``scope`` is a region index or ``ROI``. Lines starting with ``#`` are
ignored.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from .errors import CounterSyntaxError, InconsistentRunCount, MissingRoi, NegativeValue


class Metric(str, Enum):
    CYCLES = "cycles"
    INSTRUCTIONS = "instructions"
    L1D_MISSES = "l1d_misses"
    L2D_MISSES = "l2d_misses"


METRICS = tuple(m.value for m in Metric)
HEADER = ("run", "scope", "thread") + METRICS
ROI = "ROI"


class CounterRecord(NamedTuple):
    run_id: str
    scope: int | str  # region index or ROI
    thread_id: int
    values: tuple[float, float, float, float]


@dataclass(frozen=True)
class MeasurementTable:
    """Counter values indexed ``[run, region, thread, metric]`` and ``[run, thread, metric]``.

    Runs are ordered by run id within every cell; the run axis is a position,
    not an identity shared across cells.
    """

    region_values: np.ndarray
    roi_values: np.ndarray | None
    thread_count: int

    @property
    def n_runs(self) -> int:
        if self.region_values.shape[0]:
            return self.region_values.shape[0]
        return 0 if self.roi_values is None else self.roi_values.shape[0]

    @property
    def n_regions(self) -> int:
        return self.region_values.shape[1]

    def records(self) -> list[CounterRecord]:
        out = []
        for run in range(self.n_runs):
            if self.n_regions:
                for r in range(self.n_regions):
                    for t in range(self.thread_count):
                        out.append(CounterRecord(str(run), r, t, tuple(self.region_values[run, r, t])))
            if self.roi_values is not None:
                for t in range(self.thread_count):
                    out.append(CounterRecord(str(run), ROI, t, tuple(self.roi_values[run, t])))
        return out


def _number(text: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CounterSyntaxError(f"line {line_no}: bad number {text!r}") from None
    if not math.isfinite(value):
        raise CounterSyntaxError(f"line {line_no}: non-finite value {text!r}")
    if value < 0:
        raise NegativeValue(f"line {line_no}: negative counter value {text!r}")
    return value


def parse_counters(source) -> MeasurementTable:
    """Parse a counter CSV (text, stream or iterable of lines) and check its shape."""
    lines = io.StringIO(source) if isinstance(source, str) else source
    numbered = [(i, ln) for i, ln in enumerate(lines, start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not numbered:
        raise CounterSyntaxError("empty counter file")
    reader = csv.reader(ln for _, ln in numbered)
    header = tuple(h.strip() for h in next(reader))
    if header != HEADER:
        raise CounterSyntaxError(f"header must be {','.join(HEADER)}")

    cells: dict[tuple, dict[str, tuple]] = {}
    for (line_no, _), row in zip(numbered[1:], reader):
        if len(row) != len(HEADER):
            raise CounterSyntaxError(f"line {line_no}: expected {len(HEADER)} fields, got {len(row)}")
        run, scope, thread = (x.strip() for x in row[:3])
        if scope != ROI:
            try:
                scope = int(scope)
            except ValueError:
                raise CounterSyntaxError(f"line {line_no}: bad scope {scope!r}") from None
            if scope < 0:
                raise CounterSyntaxError(f"line {line_no}: negative region index")
        try:
            tid = int(thread)
        except ValueError:
            raise CounterSyntaxError(f"line {line_no}: bad thread id {thread!r}") from None
        if tid < 0:
            raise CounterSyntaxError(f"line {line_no}: negative thread id")
        values = tuple(_number(x.strip(), line_no) for x in row[3:])
        runs = cells.setdefault((scope, tid), {})
        if run in runs:
            raise CounterSyntaxError(f"line {line_no}: duplicate record for run {run}, scope {scope}, thread {tid}")
        runs[run] = values

    return _table_from_cells(cells)


def _run_key(run: str):
    return (0, int(run), run) if run.lstrip("-").isdigit() else (1, 0, run)


def _table_from_cells(cells: dict) -> MeasurementTable:
    threads = sorted({t for _, t in cells})
    thread_count = threads[-1] + 1
    if threads != list(range(thread_count)):
        raise InconsistentRunCount(f"thread ids must be contiguous from 0, found {threads}")
    regions = sorted({s for s, _ in cells if s != ROI})
    n_regions = len(regions)
    if regions != list(range(n_regions)):
        missing = sorted(set(range(regions[-1] + 1)) - set(regions)) if regions else []
        raise InconsistentRunCount(f"regions missing from counter table: {missing[:10]}")
    has_roi = any(s == ROI for s, _ in cells)

    scopes = list(range(n_regions)) + ([ROI] if has_roi else [])
    counts = {}
    for scope in scopes:
        for t in range(thread_count):
            counts[(scope, t)] = len(cells.get((scope, t), {}))
    n_runs = max(counts.values())
    bad = [cell for cell, c in counts.items() if c != n_runs]
    if bad:
        scope, t = bad[0]
        raise InconsistentRunCount(
            f"scope {scope}, thread {t} has {counts[bad[0]]} runs; expected {n_runs} ({len(bad)} cells differ)"
        )

    region_values = np.zeros((n_runs, n_regions, thread_count, len(METRICS)))
    for r in range(n_regions):
        for t in range(thread_count):
            runs = cells[(r, t)]
            region_values[:, r, t, :] = [runs[k] for k in sorted(runs, key=_run_key)]
    roi_values = None
    if has_roi:
        roi_values = np.zeros((n_runs, thread_count, len(METRICS)))
        for t in range(thread_count):
            runs = cells[(ROI, t)]
            roi_values[:, t, :] = [runs[k] for k in sorted(runs, key=_run_key)]
    return MeasurementTable(region_values, roi_values, thread_count)


def load_counters(path) -> MeasurementTable:
    with open(path) as f:
        return parse_counters(f)


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def write_counters(table: MeasurementTable, out: TextIO, header: Iterable[str] = ()) -> None:
    for line in header:
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for rec in table.records():
        writer.writerow([rec.run_id, rec.scope, rec.thread_id, *(_fmt(v) for v in rec.values)])


def format_counters(table: MeasurementTable) -> str:
    buf = io.StringIO()
    write_counters(table, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class AggregateStats:
    """Mean and sample standard deviation per cell; ROI arrays are None when absent."""

    region_mean: np.ndarray  # [region, thread, metric]
    region_std: np.ndarray
    roi_mean: np.ndarray | None  # [thread, metric]
    roi_std: np.ndarray | None
    n_runs: int

    @property
    def n_regions(self) -> int:
        return self.region_mean.shape[0]

    @property
    def thread_count(self) -> int:
        return self.region_mean.shape[1] if self.roi_mean is None else self.roi_mean.shape[0]

    @property
    def region_cov(self) -> np.ndarray:
        return _cov(self.region_mean, self.region_std)

    @property
    def roi_cov(self) -> np.ndarray | None:
        return None if self.roi_mean is None else _cov(self.roi_mean, self.roi_std)


def _cov(mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(mean > 0, std / np.where(mean > 0, mean, 1.0), np.nan)


def _mean_std(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    if values.shape[0] > 1:
        std = values.std(axis=0, ddof=1)
    else:
        std = np.zeros_like(mean)
    return mean, std


def aggregate(table: MeasurementTable) -> AggregateStats:
    """Arithmetic mean and (n-1) standard deviation across runs."""
    if table.n_runs < 1:
        raise InconsistentRunCount("table has no runs")
    if table.n_runs == 1:
        warnings.warn("single run: standard deviations reported as 0", stacklevel=2)
    region_mean, region_std = _mean_std(table.region_values)
    roi_mean = roi_std = None
    if table.roi_values is not None:
        roi_mean, roi_std = _mean_std(table.roi_values)
    return AggregateStats(region_mean, region_std, roi_mean, roi_std, table.n_runs)


class CovFlag(NamedTuple):
    scope: int | str
    thread_id: int
    metric: str
    cov: float


def cov_report(stats: AggregateStats, flag_threshold: float = 0.05) -> list[CovFlag]:
    """Cells whose coefficient of variation exceeds the threshold, largest first.

    Cells with zero mean have no defined CoV and are never flagged.
    """
    flags = []
    cov = stats.region_cov
    for r, t, m in zip(*np.nonzero(cov > flag_threshold)):
        flags.append(CovFlag(int(r), int(t), METRICS[m], float(cov[r, t, m])))
    if stats.roi_mean is not None:
        roi_cov = stats.roi_cov
        for t, m in zip(*np.nonzero(roi_cov > flag_threshold)):
            flags.append(CovFlag(ROI, int(t), METRICS[m], float(roi_cov[t, m])))
    flags.sort(key=lambda f: (-f.cov, str(f.scope), f.thread_id, f.metric))
    return flags


@dataclass(frozen=True)
class OverheadReport:
    overhead: np.ndarray  # [thread, metric], NaN where the ROI mean is zero
    flagged: tuple[tuple[int, str], ...]  # (thread, metric) cells with zero ROI mean

    def mean_by_metric(self) -> dict[str, float]:
        out = {}
        for m, name in enumerate(METRICS):
            col = self.overhead[:, m]
            col = col[~np.isnan(col)]
            out[name] = float(col.mean()) if col.size else float("nan")
        return out

    @property
    def average(self) -> float:
        valid = self.overhead[~np.isnan(self.overhead)]
        return float(valid.mean()) if valid.size else float("nan")


def overhead_report(per_region_stats: AggregateStats, roi_stats: AggregateStats | None = None) -> OverheadReport:
    """Relative gap between summed per-region means and the uninstrumented ROI mean."""
    roi_stats = per_region_stats if roi_stats is None else roi_stats
    if roi_stats.roi_mean is None:
        raise MissingRoi("no ROI measurements to compare against")
    summed = per_region_stats.region_mean.sum(axis=0)
    roi = roi_stats.roi_mean
    if summed.shape != roi.shape:
        raise MissingRoi(f"per-region cells {summed.shape} do not match ROI cells {roi.shape}")
    with np.errstate(divide="ignore", invalid="ignore"):
        overhead = np.where(roi > 0, np.abs(summed - roi) / np.where(roi > 0, roi, 1.0), np.nan)
    flagged = tuple((int(t), METRICS[m]) for t, m in zip(*np.nonzero(roi <= 0)))
    return OverheadReport(overhead, flagged)


def table_from_arrays(region_values: np.ndarray, roi_values: np.ndarray | None = None) -> MeasurementTable:
    region_values = np.asarray(region_values, dtype=np.float64)
    if region_values.ndim != 4 or region_values.shape[-1] != len(METRICS):
        raise ValueError("region_values must be [run, region, thread, metric]")
    if roi_values is not None:
        roi_values = np.asarray(roi_values, dtype=np.float64)
    return MeasurementTable(region_values, roi_values, region_values.shape[2])


def metric_index(metric: str | Metric) -> int:
    return METRICS.index(Metric(metric).value)

