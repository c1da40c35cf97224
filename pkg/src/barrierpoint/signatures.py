"""Per-region signature vectors: BBV and LDV parts, normalization, projection."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch
from .reuse import LINE_SHIFT, N_BUCKETS, DistanceHistogram, LruState
from .trace import BlockExec, WorkloadTrace

THREAD_MODES = ("concat", "sum")


@dataclass(frozen=True)
class SignatureConfig:
    bbv_weight: float = 0.5  # LDV portion gets 1 - bbv_weight
    thread_mode: str = "concat"
    reset_ldv: bool = False  # fresh LRU stacks at every barrier
    line_shift: int = LINE_SHIFT

    def __post_init__(self):
        if not 0.0 <= self.bbv_weight <= 1.0:
            raise ValueError("bbv_weight must lie in [0, 1]")
        if self.thread_mode not in THREAD_MODES:
            raise ValueError(f"thread_mode must be one of {THREAD_MODES}")


@dataclass(frozen=True)
class SignatureVector:
    region_index: int
    values: np.ndarray


@dataclass(frozen=True)
class ProjectionMatrix:
    seed: int
    matrix: np.ndarray  # target_dim x source_dim

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[1]


def build_bbv(trace: WorkloadTrace, region_index: int, thread_id: int) -> dict[int, int]:
    """Block id -> executions x instruction count, for one thread of one region."""
    region = trace.region(region_index)
    if not 0 <= thread_id < trace.thread_count:
        raise IndexError(f"thread {thread_id} out of range [0, {trace.thread_count})")
    bbv: Counter = Counter()
    for e in region.per_thread_events[thread_id]:
        if type(e) is BlockExec:
            bbv[e.block_id] += e.instr_count
    return dict(bbv)


def build_ldv(
    trace: WorkloadTrace, region_index: int, thread_id: int, carry_state: LruState
) -> DistanceHistogram:
    """Histogram of the region's stack distances; advances ``carry_state``."""
    region = trace.region(region_index)
    if not 0 <= thread_id < trace.thread_count:
        raise IndexError(f"thread {thread_id} out of range [0, {trace.thread_count})")
    distances = carry_state.observe_many(region.addresses(thread_id))
    return DistanceHistogram.from_distances(distances)


def _scaled(part: np.ndarray, share: float) -> np.ndarray:
    total = part.sum()
    return part * (share / total) if total > 0 else np.zeros_like(part)


def assemble_signature(
    bbvs: Sequence[dict[int, int]],
    ldvs: Sequence[DistanceHistogram],
    vocabulary: Sequence[int],
    region_index: int,
    bbv_weight: float = 0.5,
    thread_mode: str = "concat",
) -> SignatureVector:
    """Concatenate per-thread BBV parts, then per-thread LDV parts.

    Each portion is L1-normalized to its share on its own; an all-zero portion
    stays zero and does not hand its share to the other.
    """
    if len(bbvs) != len(ldvs):
        raise DimensionMismatch(f"{len(bbvs)} BBVs but {len(ldvs)} LDVs")
    column = {b: i for i, b in enumerate(vocabulary)}
    if len(column) != len(vocabulary):
        raise DimensionMismatch("vocabulary has duplicate block ids")
    width = len(vocabulary)

    bbv_rows = np.zeros((len(bbvs), width))
    for t, bbv in enumerate(bbvs):
        for block, weight in bbv.items():
            try:
                bbv_rows[t, column[block]] = weight
            except KeyError:
                raise DimensionMismatch(f"block {block} not in vocabulary") from None
    ldv_rows = np.array([h.as_vector() for h in ldvs]).reshape(len(ldvs), N_BUCKETS)

    if thread_mode == "sum":
        bbv_rows = bbv_rows.sum(axis=0, keepdims=True)
        ldv_rows = ldv_rows.sum(axis=0, keepdims=True)
    elif thread_mode != "concat":
        raise ValueError(f"unknown thread_mode {thread_mode!r}")

    values = np.concatenate(
        [_scaled(bbv_rows.ravel(), bbv_weight), _scaled(ldv_rows.ravel(), 1.0 - bbv_weight)]
    )
    return SignatureVector(region_index, values)


def signature_dim(trace: WorkloadTrace, thread_mode: str = "concat") -> int:
    threads = trace.thread_count if thread_mode == "concat" else 1
    return threads * (len(trace.block_vocabulary) + N_BUCKETS)


def build_signatures(trace: WorkloadTrace, config: SignatureConfig = SignatureConfig()) -> np.ndarray:
    """Signature matrix, one row per region in region order."""
    states = [LruState(config.line_shift) for _ in range(trace.thread_count)]
    rows = []
    for r in range(trace.n_regions):
        if config.reset_ldv:
            states = [LruState(config.line_shift) for _ in range(trace.thread_count)]
        bbvs = [build_bbv(trace, r, t) for t in range(trace.thread_count)]
        ldvs = [build_ldv(trace, r, t, states[t]) for t in range(trace.thread_count)]
        sv = assemble_signature(bbvs, ldvs, trace.block_vocabulary, r, config.bbv_weight, config.thread_mode)
        rows.append(sv.values)
    return np.vstack(rows)


def make_projection(source_dim: int, target_dim: int = 15, seed: int = 0) -> ProjectionMatrix:
    """Uniform [-1, 1] entries from numpy's PCG64 generator seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    return ProjectionMatrix(seed, rng.uniform(-1.0, 1.0, size=(target_dim, source_dim)))


def project(sv, m: ProjectionMatrix) -> np.ndarray:
    """Project one signature (or a row-per-region matrix) into the target space."""
    values = sv.values if isinstance(sv, SignatureVector) else np.asarray(sv, dtype=np.float64)
    if values.shape[-1] != m.source_dim:
        raise DimensionMismatch(f"signature has dimension {values.shape[-1]}, projection expects {m.source_dim}")
    return values @ m.matrix.T
