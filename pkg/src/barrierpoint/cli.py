"""Command-line pipeline: ``synth``, ``discover``, ``validate``, ``stats``.

Every report starts with ``# config: <json>``; passing that file back through
``--config`` reruns the command with identical settings.

Exit codes: 0 success, 2 input/parse error, 3 degenerate workload,
4 platform alignment failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BarrierPointError, InputError, RegionCountMismatch
from .measurements import METRICS, aggregate, cov_report, load_counters, overhead_report, write_counters
from .reconstruction import (
    ERROR_MODES,
    cross_validate,
    error_dump,
    render_csv,
    render_text,
    speedup_report,
    table_report,
)
from .selection import WEIGHT_MODES, DiscoveryParams, format_set, generate_sets, read_set
from .signatures import THREAD_MODES, SignatureConfig
from .synthgen import PhaseSpec, WorkloadSpec, default_phases, format_labels, generate, make_drift_scenario
from .trace import instruction_weights, load_trace, write_trace

log = logging.getLogger("barrierpoint")

SINGLE_BP_WARNING = "single barrier point: no simulation-time gain"


@dataclass
class PipelineConfig:
    command: str = ""
    out_dir: str = "."
    trace: str | None = None
    counters: list = field(default_factory=list)  # [name, path] pairs
    sets: list = field(default_factory=list)
    workload: str | None = None
    # discovery
    projection_seed: int = 0
    clustering_seed: int = 0
    n_sets: int = 10
    set_seeds: list | None = None
    target_dim: int = 15
    max_k: int = 20
    bic_threshold: float = 0.9
    restarts: int = 5
    max_iter: int = 100
    weight_mode: str = "instructions"
    significance: float | None = None
    reset_ldv: bool = False
    bbv_weight: float = 0.5
    thread_mode: str = "concat"
    # reporting
    cov_threshold: float = 0.05
    error_mode: str = "per-thread"
    format: str = "text"
    # synthesis
    spec: str | None = None
    threads: int = 4
    regions: int = 1000
    phases: int = 5
    sampler: str = "cyclic"
    noise: float = 0.005
    perturbation: float = 0.0
    runs: int = 20
    seed: int = 0
    overhead: float = 0.0
    counter_scale: float = 1000.0
    drift: int = 0

    def validate(self) -> None:
        checks = [
            (self.weight_mode in WEIGHT_MODES, f"weight_mode must be one of {WEIGHT_MODES}"),
            (self.thread_mode in THREAD_MODES, f"thread_mode must be one of {THREAD_MODES}"),
            (self.error_mode in ERROR_MODES, f"error_mode must be one of {ERROR_MODES}"),
            (self.format in ("csv", "text"), "format must be csv or text"),
            (0.0 <= self.bic_threshold <= 1.0, "bic_threshold must lie in [0, 1]"),
            (0.0 <= self.bbv_weight <= 1.0, "bbv_weight must lie in [0, 1]"),
            (self.significance is None or 0.0 <= self.significance < 1.0, "significance must lie in [0, 1)"),
            (self.cov_threshold >= 0, "cov_threshold must be >= 0"),
            (min(self.target_dim, self.max_k, self.restarts, self.max_iter, self.n_sets) >= 1,
             "target_dim, max_k, restarts, max_iter and n_sets must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise InputError(message)

    def header(self) -> str:
        return "config: " + json.dumps(asdict(self), sort_keys=True)

    def seeds(self) -> list[int]:
        return list(self.set_seeds) if self.set_seeds is not None else list(range(self.n_sets))

    def discovery_params(self) -> DiscoveryParams:
        return DiscoveryParams(
            target_dim=self.target_dim,
            max_k=self.max_k,
            bic_threshold=self.bic_threshold,
            restarts=self.restarts,
            max_iter=self.max_iter,
            weight_mode=self.weight_mode,
            projection_seed=self.projection_seed,
            clustering_seed=self.clustering_seed,
            significance=self.significance,
            signature=SignatureConfig(self.bbv_weight, self.thread_mode, self.reset_ldv),
        )


def load_config(path) -> dict:
    """Config dict from a JSON file or from the ``# config:`` line of any report."""
    text = Path(path).read_text()
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise InputError(f"{path}: no '# config:' header and not a JSON file") from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def _with_header(cfg: PipelineConfig, text: str, extra: list[str] = ()) -> str:
    lines = [f"# {cfg.header()}"] + [f"# {x}" for x in extra]
    return "\n".join(lines) + "\n" + text


# --- synth -----------------------------------------------------------------


def _load_spec(cfg: PipelineConfig) -> tuple[WorkloadSpec, tuple[PhaseSpec, ...]]:
    spec = WorkloadSpec(
        thread_count=cfg.threads,
        n_regions=cfg.regions,
        n_phases=cfg.phases,
        sampler=cfg.sampler,
        noise=cfg.noise,
        perturbation=cfg.perturbation,
        runs=cfg.runs,
        seed=cfg.seed,
        overhead=cfg.overhead,
        counter_scale=cfg.counter_scale,
    )
    phases = None
    if cfg.spec:
        try:
            data = json.loads(Path(cfg.spec).read_text())
            overrides = {k: v for k, v in data.items() if k != "phases"}
            if "phase_sequence" in overrides and overrides["phase_sequence"] is not None:
                overrides["phase_sequence"] = tuple(overrides["phase_sequence"])
            spec = dataclasses.replace(spec, **overrides)
            if "phases" in data:
                phases = tuple(
                    PhaseSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in p.items()})
                    for p in data["phases"]
                )
        except (TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InputError(f"bad spec file {cfg.spec}: {exc}") from None
    if phases is None:
        phases = default_phases(spec.n_phases, spec.seed)
    return spec, phases


def cmd_synth(cfg: PipelineConfig) -> list[Path]:
    spec, phases = _load_spec(cfg)
    out = Path(cfg.out_dir)
    if cfg.drift:
        work, work_b = make_drift_scenario(spec, cfg.drift, phases)
    else:
        work = work_b = generate(spec, phases)

    header = [cfg.header()]
    written = []

    def emit(name, writer):
        buf = io.StringIO()
        writer(buf)
        _write(out / name, buf.getvalue())
        written.append(out / name)

    emit("trace.txt", lambda b: write_trace(work.trace, b, header))
    emit("counters_A.csv", lambda b: write_counters(work.counters_a, b, header))
    emit("counters_B.csv", lambda b: write_counters(work_b.counters_b, b, header))
    emit("labels.csv", lambda b: b.write(format_labels(work.labels, header)))
    if cfg.drift:
        emit("trace_B.txt", lambda b: write_trace(work_b.trace, b, header))
    return written


# --- discover --------------------------------------------------------------


def cmd_discover(cfg: PipelineConfig) -> list[Path]:
    if not cfg.trace:
        raise InputError("discover needs --trace")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        trace = load_trace(cfg.trace)
    seeds = cfg.seeds()
    collection = generate_sets(trace, len(seeds), seeds, cfg.discovery_params())
    out = Path(cfg.out_dir)
    written = []

    notes = []
    if trace.n_regions == 1:
        notes.append(f"warning: {SINGLE_BP_WARNING}")
        print(f"warning: {SINGLE_BP_WARNING}", file=sys.stderr)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    points = collection.projected[0]
    w.writerow(["region_index"] + [f"p{i}" for i in range(points.shape[1])])
    for r, row in enumerate(points):
        w.writerow([r] + [repr(float(x)) for x in row])
    _write(out / "signatures.csv", _with_header(cfg, buf.getvalue(), [f"projection_seed: {collection.sets[0].projection_seed}"]))
    written.append(out / "signatures.csv")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["set", "region_index", "cluster_id"])
    for i, clustering in enumerate(collection.clusterings):
        for r, c in enumerate(clustering.assignment):
            w.writerow([i, r, int(c)])
    bic_lines = [
        f"set {i}: k={c.k} bic=" + " ".join(f"{k}:{b!r}" for k, b in sorted(c.bic_curve.items()))
        for i, c in enumerate(collection.clusterings)
    ]
    _write(out / "clustering.csv", _with_header(cfg, buf.getvalue(), bic_lines))
    written.append(out / "clustering.csv")

    for i, bps in enumerate(collection.sets):
        path = out / f"set_{i:02d}.csv"
        _write(path, format_set(bps, [cfg.header(), f"set: {i}", f"seed: {seeds[i]}", *notes]))
        written.append(path)
        summary = collection.summaries[i]
        print(f"set {i:2d}: {summary.label} barrier points, "
              f"{100 * summary.selected_fraction:.2f}% of instructions selected")
    return written


# --- validate --------------------------------------------------------------


def _set_paths(entries) -> list[Path]:
    paths = []
    for entry in entries:
        p = Path(entry)
        if p.is_dir():
            found = sorted(p.glob("set_*.csv"))
            if not found:
                raise InputError(f"no set_*.csv files in {p}")
            paths.extend(found)
        elif p.exists():
            paths.append(p)
        else:
            raise InputError(f"set file not found: {p}")
    if not paths:
        raise InputError("validate needs at least one --sets file or directory")
    return paths


def cmd_validate(cfg: PipelineConfig) -> list[Path]:
    if not cfg.trace or not cfg.counters:
        raise InputError("validate needs --trace and at least one --counters")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        trace = load_trace(cfg.trace)
    weights = instruction_weights(trace)
    set_files = _set_paths(cfg.sets)
    sets = [read_set(p) for p in set_files]
    set_ids = [p.stem for p in set_files]
    for bps in sets:
        if bps.n_regions != trace.n_regions:
            raise RegionCountMismatch(bps.n_regions, trace.n_regions)
    speedups = [speedup_report(bps, weights) for bps in sets]

    platforms = []
    for name, path in cfg.counters:
        platforms.append((name, aggregate(load_counters(path))))

    rows_sets, rows_val, rows_sp, configs, ids, labelled = [], [], [], [], [], []
    per_thread = io.StringIO()
    pw = csv.writer(per_thread, lineterminator="\n")
    pw.writerow(["set", "platform", "thread", "metric", "rel_error"])
    for name, stats in platforms:
        for sid, bps, sp in zip(set_ids, sets, speedups):
            report = cross_validate(bps, stats, mode=cfg.error_mode)
            rows_sets.append(bps)
            rows_val.append(report)
            rows_sp.append(sp)
            configs.append(name)
            ids.append(sid)
            labelled.append((sid, name, report))
            for t in range(report.rel_errors.shape[0]):
                for m, metric in enumerate(METRICS):
                    pw.writerow([sid, name, t, metric, repr(float(report.rel_errors[t, m]))])

    workload = cfg.workload or Path(cfg.trace).stem
    rows = table_report(rows_sets, rows_val, rows_sp, workload, configs, ids)
    table = render_csv(rows) if cfg.format == "csv" else render_text(rows)

    best = io.StringIO()
    bw = csv.writer(best, lineterminator="\n")
    bw.writerow(["platform", "metric", "best_set", "error"])
    for name, _ in platforms:
        candidates = [(sid, rep) for sid, pname, rep in labelled if pname == name]
        for metric in METRICS + ("all",):
            def score(item):
                rep = item[1]
                if metric == "all":
                    return float(np.nanmean([rep.mean_abs_error[m] for m in METRICS]))
                return rep.mean_abs_error[metric]
            sid, rep = min(candidates, key=lambda it: (np.nan_to_num(score(it), nan=np.inf), it[0]))
            bw.writerow([name, metric, sid, repr(score((sid, rep)))])

    out = Path(cfg.out_dir)
    suffix = "csv" if cfg.format == "csv" else "txt"
    outputs = {
        f"table.{suffix}": table,
        "validation.csv": per_thread.getvalue(),
        "errors.csv": error_dump(labelled),
        "best_sets.csv": best.getvalue(),
    }
    written = []
    for fname, text in outputs.items():
        _write(out / fname, _with_header(cfg, text))
        written.append(out / fname)
    sys.stdout.write(table)
    return written


# --- stats -----------------------------------------------------------------


def cmd_stats(cfg: PipelineConfig) -> list[Path]:
    if not cfg.counters:
        raise InputError("stats needs at least one --counters")
    cov = io.StringIO()
    cw = csv.writer(cov, lineterminator="\n")
    cw.writerow(["platform", "scope", "thread", "metric", "cov"])
    over = io.StringIO()
    ow = csv.writer(over, lineterminator="\n")
    ow.writerow(["platform", "thread", "metric", "overhead"])
    text_lines = []
    for name, path in cfg.counters:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stats = aggregate(load_counters(path))
        flags = cov_report(stats, cfg.cov_threshold)
        for f in flags:
            cw.writerow([name, f.scope, f.thread_id, f.metric, repr(f.cov)])
        text_lines.append(f"{name}: {len(flags)} cell(s) with CoV > {cfg.cov_threshold}")
        if stats.roi_mean is not None and stats.n_regions:
            rep = overhead_report(stats)
            for t in range(rep.overhead.shape[0]):
                for m, metric in enumerate(METRICS):
                    value = rep.overhead[t, m]
                    ow.writerow([name, t, metric, "flagged" if np.isnan(value) else repr(float(value))])
            means = rep.mean_by_metric()
            text_lines.append(
                f"{name}: overhead " + ", ".join(f"{m} {100 * v:.2f}%" for m, v in means.items())
            )
    out = Path(cfg.out_dir)
    _write(out / "cov.csv", _with_header(cfg, cov.getvalue()))
    _write(out / "overhead.csv", _with_header(cfg, over.getvalue()))
    print("\n".join(text_lines))
    return [out / "cov.csv", out / "overhead.csv"]


COMMANDS = {"synth": cmd_synth, "discover": cmd_discover, "validate": cmd_validate, "stats": cmd_stats}


def _counter_arg(text: str) -> list:
    name, sep, path = text.partition("=")
    if not sep:
        path, name = text, Path(text).stem
    return [name, path]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barrierpoint", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config or any report with a '# config:' header")
        p.add_argument("-o", "--out-dir", dest="out_dir")
        p.add_argument("-v", "--verbose", action="store_true", default=False)

    def discovery(p):
        p.add_argument("--projection-seed", dest="projection_seed", type=int)
        p.add_argument("--clustering-seed", dest="clustering_seed", type=int)
        p.add_argument("--n-sets", dest="n_sets", type=int)
        p.add_argument("--set-seeds", dest="set_seeds", type=lambda s: [int(x) for x in s.split(",")])
        p.add_argument("--target-dim", dest="target_dim", type=int)
        p.add_argument("--max-k", dest="max_k", type=int)
        p.add_argument("--bic-threshold", dest="bic_threshold", type=float)
        p.add_argument("--restarts", type=int)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--weight-mode", dest="weight_mode", choices=WEIGHT_MODES)
        p.add_argument("--significance", type=float, help="drop barrier points below this instruction share")
        p.add_argument("--reset-ldv", dest="reset_ldv", action="store_true")
        p.add_argument("--bbv-weight", dest="bbv_weight", type=float)
        p.add_argument("--thread-mode", dest="thread_mode", choices=THREAD_MODES)

    kw = dict(argument_default=argparse.SUPPRESS)
    p = sub.add_parser("synth", help="generate a synthetic workload and counter tables", **kw)
    common(p)
    p.add_argument("--spec", help="JSON WorkloadSpec overrides, optionally with a 'phases' list")
    p.add_argument("--threads", type=int)
    p.add_argument("--regions", type=int)
    p.add_argument("--phases", type=int)
    p.add_argument("--sampler", choices=("cyclic", "random"))
    p.add_argument("--noise", type=float)
    p.add_argument("--perturbation", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--overhead", type=float)
    p.add_argument("--counter-scale", dest="counter_scale", type=float)
    p.add_argument("--drift", type=int, help="extra regions executed on platform B")

    p = sub.add_parser("discover", help="find barrier point sets in a trace", **kw)
    common(p)
    p.add_argument("--trace")
    discovery(p)

    p = sub.add_parser("validate", help="reconstruct totals and report estimation error", **kw)
    common(p)
    p.add_argument("--trace")
    p.add_argument("--sets", nargs="+")
    p.add_argument("--counters", type=_counter_arg, action="append", help="NAME=PATH (repeatable)")
    p.add_argument("--workload")
    p.add_argument("--error-mode", dest="error_mode", choices=ERROR_MODES)
    p.add_argument("--format", choices=("csv", "text"))

    p = sub.add_parser("stats", help="coefficient of variation and instrumentation overhead", **kw)
    common(p)
    p.add_argument("--counters", type=_counter_arg, action="append", help="NAME=PATH (repeatable)")
    p.add_argument("--cov-threshold", dest="cov_threshold", type=float)
    return parser


def make_config(args: argparse.Namespace) -> PipelineConfig:
    given = {k: v for k, v in vars(args).items() if k not in ("config", "verbose")}
    values = {}
    if getattr(args, "config", None):
        values = load_config(args.config)
        if values.get("command") not in (None, args.command):
            raise InputError(f"config was written by '{values.get('command')}', not '{args.command}'")
    values.update(given)
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = make_config(args)
        written = COMMANDS[cfg.command](cfg)
    except BarrierPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
