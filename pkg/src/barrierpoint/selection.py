"""Barrier point sets: representatives, multipliers, multi-seed generation, filtering."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence, TextIO

import numpy as np

from .clustering import ClusteringResult, select_k
from .errors import AllFiltered, InputError
from .formatting import format_percent, selected_label
from .signatures import SignatureConfig, build_signatures, make_projection, project
from .trace import WorkloadTrace, instruction_weights

WEIGHT_MODES = ("instructions", "count")


@dataclass(frozen=True)
class BarrierPoint:
    region_index: int
    multiplier: float


@dataclass(frozen=True)
class BarrierPointSet:
    entries: tuple[BarrierPoint, ...]
    weight_mode: str
    n_regions: int
    projection_seed: int | None = None
    clustering_seed: int | None = None
    selected_fraction: float = float("nan")
    largest_fraction: float = float("nan")

    @property
    def region_indices(self) -> list[int]:
        return [e.region_index for e in self.entries]

    @property
    def multipliers(self) -> np.ndarray:
        return np.array([e.multiplier for e in self.entries], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SetSummary:
    n_selected: int
    total_regions: int
    selected_fraction: float
    largest_fraction: float

    @property
    def label(self) -> str:
        return selected_label(self.n_selected, self.total_regions)


@dataclass(frozen=True)
class DiscoveryParams:
    target_dim: int = 15
    max_k: int = 20
    bic_threshold: float = 0.9
    restarts: int = 5
    max_iter: int = 100
    weight_mode: str = "instructions"
    projection_seed: int = 0
    clustering_seed: int = 0
    significance: float | None = None  # None keeps every barrier point
    signature: SignatureConfig = field(default_factory=SignatureConfig)

    def __post_init__(self):
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
        if not 0.0 <= self.bic_threshold <= 1.0:
            raise ValueError("bic_threshold must lie in [0, 1]")
        if self.target_dim < 1 or self.max_k < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("target_dim, max_k, restarts and max_iter must be positive")
        if self.significance is not None and not 0.0 <= self.significance < 1.0:
            raise ValueError("significance threshold must lie in [0, 1)")


@dataclass(frozen=True)
class SetCollection:
    sets: tuple[BarrierPointSet, ...]
    summaries: tuple[SetSummary, ...]
    seeds: tuple[int, ...]
    clusterings: tuple[ClusteringResult, ...]
    projected: tuple[np.ndarray, ...]
    signatures: np.ndarray

    def __len__(self) -> int:
        return len(self.sets)


def choose_representatives(
    clustering: ClusteringResult,
    points,
    weights=None,
    mode: str = "instructions",
    projection_seed: int | None = None,
) -> BarrierPointSet:
    """One representative per cluster: the member nearest its centroid.

    ``instructions`` mode scales each representative by the cluster's total
    instruction weight over its own; ``count`` mode by the cluster size.
    """
    if mode not in WEIGHT_MODES:
        raise ValueError(f"mode must be one of {WEIGHT_MODES}")
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64)
    n = pts.shape[0]
    if weights is None:
        weights = getattr(points, "weights", None)
    if weights is None:
        if mode == "instructions":
            raise ValueError("instruction-weighted multipliers need region weights")
        weights = np.ones(n)
    w = np.asarray(weights, dtype=np.float64)

    entries = []
    for c in range(clustering.k):
        members = clustering.members(c)
        if members.size == 0:
            continue
        diff = pts[members] - clustering.centroids[c]
        d2 = np.einsum("nd,nd->n", diff, diff)
        rep = int(members[np.argmin(d2)])  # members ascend, so ties go to the lowest index
        if mode == "instructions" and w[rep] > 0:
            multiplier = float(w[members].sum() / w[rep])
        else:
            if mode == "instructions":
                warnings.warn(
                    f"representative region {rep} has zero instructions; using cluster size as multiplier",
                    stacklevel=2,
                )
            multiplier = float(members.size)
        entries.append(BarrierPoint(rep, multiplier))
    entries.sort(key=lambda e: e.region_index)

    bps = BarrierPointSet(tuple(entries), mode, n, projection_seed, clustering.seed)
    summary = set_summary(bps, w, n)
    return replace(bps, selected_fraction=summary.selected_fraction, largest_fraction=summary.largest_fraction)


def set_summary(bps: BarrierPointSet, weights, total_regions: int | None = None) -> SetSummary:
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    chosen = w[bps.region_indices] if len(bps) else np.zeros(0)
    if total > 0:
        selected = float(chosen.sum() / total)
        largest = float(chosen.max(initial=0.0) / total)
    else:
        selected = largest = float("nan")
    return SetSummary(len(bps), bps.n_regions if total_regions is None else total_regions, selected, largest)


def filter_significant(bps: BarrierPointSet, threshold_fraction: float, weights) -> BarrierPointSet:
    """Drop entries contributing less than ``threshold_fraction`` of the weighted total.

    Survivors are rescaled by one common factor so sum(multiplier * weight) is
    unchanged.
    """
    if not 0.0 <= threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie in [0, 1)")
    w = np.asarray(weights, dtype=np.float64)
    idx = bps.region_indices
    mass = bps.multipliers * w[idx]
    total = mass.sum()
    if threshold_fraction == 0.0 or total <= 0:
        return bps
    keep = mass / total >= threshold_fraction
    if not keep.any():
        raise AllFiltered(f"threshold {threshold_fraction} removes all {len(bps)} barrier points")
    scale = total / mass[keep].sum()
    entries = tuple(
        BarrierPoint(e.region_index, e.multiplier * scale) for e, k in zip(bps.entries, keep) if k
    )
    summary = set_summary(replace(bps, entries=entries), w)
    return replace(
        bps,
        entries=entries,
        selected_fraction=summary.selected_fraction,
        largest_fraction=summary.largest_fraction,
    )


def generate_sets(
    trace: WorkloadTrace, n_sets: int, seed_list: Sequence[int], params: DiscoveryParams = DiscoveryParams()
) -> SetCollection:
    """One projection + clustering + selection pass per seed, ordered as given."""
    seeds = tuple(int(s) for s in seed_list)
    if n_sets != len(seeds):
        raise ValueError(f"n_sets={n_sets} but {len(seeds)} seeds given")
    signatures = build_signatures(trace, params.signature)
    weights = instruction_weights(trace)
    sets, summaries, clusterings, projected = [], [], [], []
    for s in seeds:
        p_seed = params.projection_seed + s
        c_seed = params.clustering_seed + s
        matrix = make_projection(signatures.shape[1], params.target_dim, p_seed)
        points = project(signatures, matrix)
        clustering = select_k(points, params.max_k, params.bic_threshold, c_seed, params.restarts, params.max_iter)
        bps = choose_representatives(clustering, points, weights, params.weight_mode, p_seed)
        if params.significance is not None:
            bps = filter_significant(bps, params.significance, weights)
        sets.append(bps)
        summaries.append(set_summary(bps, weights))
        clusterings.append(clustering)
        projected.append(points)
    return SetCollection(tuple(sets), tuple(summaries), seeds, tuple(clusterings), tuple(projected), signatures)


def write_set(bps: BarrierPointSet, out: TextIO, header: Sequence[str] = ()) -> None:
    for line in header:
        out.write(f"# {line}\n")
    out.write(f"# weight_mode: {bps.weight_mode}\n")
    out.write(f"# n_regions: {bps.n_regions}\n")
    out.write(f"# projection_seed: {bps.projection_seed}\n")
    out.write(f"# clustering_seed: {bps.clustering_seed}\n")
    out.write(f"# selected: {selected_label(len(bps), bps.n_regions)}\n")
    out.write(f"# selected_fraction: {bps.selected_fraction!r}\n")
    out.write(f"# largest_fraction: {bps.largest_fraction!r}\n")
    out.write(
        f"# instructions_selected_pct: {format_percent(bps.selected_fraction)} "
        f"largest_pct: {format_percent(bps.largest_fraction)}\n"
    )
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["region_index", "multiplier"])
    for e in bps.entries:
        writer.writerow([e.region_index, repr(e.multiplier)])


def format_set(bps: BarrierPointSet, header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    write_set(bps, buf, header)
    return buf.getvalue()


def _opt_int(text: str) -> int | None:
    return None if text == "None" else int(text)


def read_set(source) -> BarrierPointSet:
    """Parse a set file written by ``write_set`` (path, stream or text)."""
    if isinstance(source, str) and "\n" in source:
        lines = source.splitlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as f:
            lines = f.read().splitlines()

    meta: dict[str, str] = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(": ")
            if sep:
                meta.setdefault(key, value)
        elif line.strip():
            body.append(line)
    try:
        rows = list(csv.DictReader(body))
        entries = tuple(BarrierPoint(int(r["region_index"]), float(r["multiplier"])) for r in rows)
        return BarrierPointSet(
            entries,
            meta.get("weight_mode", "instructions"),
            int(meta["n_regions"]),
            _opt_int(meta.get("projection_seed", "None")),
            _opt_int(meta.get("clustering_seed", "None")),
            float(meta.get("selected_fraction", "nan")),
            float(meta.get("largest_fraction", "nan")),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"malformed barrier point set file: {exc}") from None

