"""Synthetic barrier-synchronized workloads with known phase structure.

Each region belongs to one phase. A phase fixes the block mix, the memory
access pattern and per-platform rates (CPI, L1D/L2D MPKI). Counter tables for
two platforms are derived from the trace's own instruction counts, so the
ground truth relating signatures to performance is known exactly.

Every region draws from its own seeded stream, so growing ``n_regions``
leaves the earlier regions unchanged (used by the drift scenario).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import SpecError
from .measurements import METRICS, MeasurementTable, table_from_arrays
from .trace import BlockExec, MemAccess, ThreadEvent, WorkloadTrace, build_trace

LINE_BYTES = 64
_THREAD_STRIDE = 1 << 44  # keeps thread address ranges disjoint


@dataclass(frozen=True)
class PhaseSpec:
    phase_id: int
    block_ids: tuple[int, ...]
    block_instr: tuple[int, ...]
    block_probs: tuple[float, ...]
    ws_lines: int
    random_mix: float  # fraction of accesses to a random line instead of the stride walk
    accesses_per_region: int
    base_instructions: int  # per thread per region
    cpi_a: float
    cpi_b: float
    l1_mpki_a: float
    l1_mpki_b: float
    l2_mpki_a: float
    l2_mpki_b: float

    def rates(self, platform: str) -> tuple[float, float, float]:
        if platform == "A":
            return self.cpi_a, self.l1_mpki_a, self.l2_mpki_a
        return self.cpi_b, self.l1_mpki_b, self.l2_mpki_b


@dataclass(frozen=True)
class WorkloadSpec:
    thread_count: int = 4
    n_regions: int = 1000
    n_phases: int = 5
    phase_sequence: tuple[int, ...] | None = None
    sampler: str = "cyclic"  # or "random"; ignored when phase_sequence is given
    noise: float = 0.005  # relative std of counter noise
    perturbation: float = 0.0  # per-event probability of a signature perturbation
    runs: int = 20
    seed: int = 0
    overhead: float = 0.0  # instrumentation inflation of per-region counters
    counter_scale: float = 1000.0  # dynamic executions represented by one traced block execution


@dataclass(frozen=True)
class SyntheticWorkload:
    trace: WorkloadTrace
    counters_a: MeasurementTable
    counters_b: MeasurementTable
    labels: np.ndarray
    phases: tuple[PhaseSpec, ...] = field(default=())


def default_phases(n_phases: int = 5, seed: int = 0, blocks_per_phase: int = 8) -> tuple[PhaseSpec, ...]:
    """Distinct phases over a shared block table; platform B is 1.5-3x slower per phase."""
    if n_phases < 1:
        raise SpecError("need at least one phase")
    rng = np.random.default_rng([seed, 99])
    n_blocks = blocks_per_phase * n_phases + 4
    block_size = rng.integers(4, 40, size=n_blocks)
    phases = []
    for i in range(n_phases):
        ids = np.sort(rng.choice(n_blocks, size=blocks_per_phase, replace=False))
        probs = rng.dirichlet(np.full(blocks_per_phase, 2.0))
        cpi_a = rng.uniform(0.5, 2.5)
        l1_a = rng.uniform(5.0, 60.0)
        l2_a = l1_a * rng.uniform(0.1, 0.6)
        l1_b = l1_a * rng.uniform(0.5, 2.0)
        l2_b = min(l1_b, l2_a * rng.uniform(0.5, 2.0))
        phases.append(
            PhaseSpec(
                phase_id=i,
                block_ids=tuple(int(b) for b in ids),
                block_instr=tuple(int(block_size[b]) for b in ids),
                block_probs=tuple(float(p) for p in probs),
                ws_lines=(4 << (i % 5)) * (1 + i // 5),
                random_mix=float(rng.uniform(0.0, 0.5)),
                accesses_per_region=96,
                base_instructions=int(rng.integers(400, 2000)),
                cpi_a=cpi_a,
                cpi_b=cpi_a * rng.uniform(1.5, 3.0),
                l1_mpki_a=l1_a,
                l1_mpki_b=l1_b,
                l2_mpki_a=l2_a,
                l2_mpki_b=l2_b,
            )
        )
    return tuple(phases)


def _check(spec: WorkloadSpec, phases: Sequence[PhaseSpec]) -> np.ndarray:
    if spec.thread_count < 1 or spec.n_regions < 1 or spec.runs < 1:
        raise SpecError("thread_count, n_regions and runs must be positive")
    if spec.counter_scale <= 0:
        raise SpecError("counter_scale must be positive")
    if spec.noise < 0 or not 0 <= spec.perturbation <= 1 or spec.overhead < 0:
        raise SpecError("noise and overhead must be >= 0, perturbation within [0, 1]")
    if not phases:
        raise SpecError("no phases defined")
    ids = [p.phase_id for p in phases]
    if ids != list(range(len(phases))):
        raise SpecError(f"phase ids must be 0..{len(phases) - 1} in order, got {ids}")
    sizes: dict[int, int] = {}
    for p in phases:
        if not (len(p.block_ids) == len(p.block_instr) == len(p.block_probs)) or not p.block_ids:
            raise SpecError(f"phase {p.phase_id}: block profile lengths differ or are empty")
        if min(p.block_instr) < 1 or min(p.block_probs) < 0 or not np.isclose(sum(p.block_probs), 1.0):
            raise SpecError(f"phase {p.phase_id}: bad block sizes or probabilities")
        if p.ws_lines < 1 or p.accesses_per_region < 0 or p.base_instructions < 1:
            raise SpecError(f"phase {p.phase_id}: working set and base instructions must be positive")
        if not 0 <= p.random_mix <= 1:
            raise SpecError(f"phase {p.phase_id}: random_mix outside [0, 1]")
        rates = (p.cpi_a, p.cpi_b, p.l1_mpki_a, p.l1_mpki_b, p.l2_mpki_a, p.l2_mpki_b)
        if min(rates) <= 0:
            raise SpecError(f"phase {p.phase_id}: rates must be positive")
        if p.l2_mpki_a > p.l1_mpki_a or p.l2_mpki_b > p.l1_mpki_b:
            raise SpecError(f"phase {p.phase_id}: L2D MPKI exceeds L1D MPKI")
        for b, size in zip(p.block_ids, p.block_instr):
            if sizes.setdefault(b, size) != size:
                raise SpecError(f"block {b} has inconsistent instruction counts across phases")

    if spec.phase_sequence is not None:
        seq = np.asarray(spec.phase_sequence, dtype=np.int64)
        if seq.shape != (spec.n_regions,):
            raise SpecError(f"phase_sequence has {seq.size} entries for {spec.n_regions} regions")
        if seq.min() < 0 or seq.max() >= len(phases):
            raise SpecError("phase_sequence refers to an undefined phase")
        return seq
    if spec.sampler == "cyclic":
        return np.arange(spec.n_regions) % len(phases)
    if spec.sampler == "random":
        rng = np.random.default_rng([spec.seed, 3])
        return np.array([rng.integers(len(phases)) for _ in range(spec.n_regions)])
    raise SpecError(f"unknown sampler {spec.sampler!r}")


def _block_template(p: PhaseSpec) -> np.ndarray:
    """Position in the phase profile of each block execution, fixed per phase."""
    mean_size = float(np.dot(p.block_probs, p.block_instr))
    n_exec = max(1, int(round(p.base_instructions / mean_size)))
    counts = np.maximum(1, np.rint(np.asarray(p.block_probs) * n_exec).astype(np.int64))
    # round-robin interleave so the execution order looks like a loop body
    order = []
    remaining = counts.copy()
    while remaining.any():
        for j in np.flatnonzero(remaining):
            order.append(j)
            remaining[j] -= 1
    return np.asarray(order, dtype=np.int64)


def _memory_template(p: PhaseSpec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([seed, 7, p.phase_id])
    n = p.accesses_per_region
    random_pick = rng.random(n) < p.random_mix
    offsets = np.where(random_pick, rng.integers(p.ws_lines, size=n), np.arange(n) % p.ws_lines)
    byte_offsets = rng.integers(LINE_BYTES, size=n)
    return offsets.astype(np.int64), byte_offsets.astype(np.int64)


def _region_events(spec, p, block_tpl, mem_tpl, region, thread, chunk_lines, rng) -> list[ThreadEvent]:
    blocks = block_tpl.copy()
    offsets, byte_offsets = mem_tpl[0].copy(), mem_tpl[1].copy()
    if spec.perturbation > 0:
        swap = rng.random(blocks.size) < spec.perturbation
        blocks[swap] = rng.integers(len(p.block_ids), size=int(swap.sum()))
        move = rng.random(offsets.size) < spec.perturbation
        offsets[move] = rng.integers(p.ws_lines, size=int(move.sum()))

    base = (thread + 1) * _THREAD_STRIDE + region * chunk_lines * LINE_BYTES
    addresses = base + offsets * LINE_BYTES + byte_offsets
    events: list[ThreadEvent] = []
    splits = np.array_split(addresses, blocks.size) if blocks.size else [addresses]
    for j, chunk in zip(blocks.tolist(), splits):
        events.append(BlockExec(thread, p.block_ids[j], p.block_instr[j]))
        events.extend(MemAccess(thread, int(a)) for a in chunk.tolist())
    return events


def _counters(spec, phases, labels, instr, platform: str) -> MeasurementTable:
    n_regions, threads = instr.shape
    uninstrumented = np.zeros((spec.runs, n_regions, threads, len(METRICS)))
    slot = 1 if platform == "A" else 2
    for r in range(n_regions):
        rng = np.random.default_rng([spec.seed, 20 + slot, r])
        eps = rng.normal(0.0, 1.0, size=(spec.runs, threads, len(METRICS))) * spec.noise
        factor = np.maximum(0.0, 1.0 + eps)
        cpi, l1, l2 = phases[labels[r]].rates(platform)
        base = instr[r][None, :] * spec.counter_scale
        uninstrumented[:, r, :, 0] = base * cpi * factor[..., 0]
        uninstrumented[:, r, :, 1] = base * factor[..., 1]
        uninstrumented[:, r, :, 2] = base * l1 / 1000.0 * factor[..., 2]
        uninstrumented[:, r, :, 3] = base * l2 / 1000.0 * factor[..., 3]
    uninstrumented = np.rint(uninstrumented)
    roi = uninstrumented.sum(axis=1)
    if spec.overhead > 0:
        regions = np.rint(uninstrumented * (1.0 + spec.overhead))
    else:
        regions = uninstrumented
    return table_from_arrays(regions, roi)


def generate(spec: WorkloadSpec = WorkloadSpec(), phases: Sequence[PhaseSpec] | None = None) -> SyntheticWorkload:
    """Trace, platform A/B counter tables and per-region phase labels."""
    if phases is None:
        phases = default_phases(spec.n_phases, spec.seed)
    phases = tuple(phases)
    labels = _check(spec, phases)
    chunk_lines = max(p.ws_lines for p in phases)
    block_tpls = [_block_template(p) for p in phases]
    mem_tpls = [_memory_template(p, spec.seed) for p in phases]

    regions = []
    instr = np.zeros((spec.n_regions, spec.thread_count))
    for r in range(spec.n_regions):
        p = phases[labels[r]]
        rng = np.random.default_rng([spec.seed, 11, r])
        per_thread = []
        for t in range(spec.thread_count):
            events = _region_events(spec, p, block_tpls[p.phase_id], mem_tpls[p.phase_id], r, t, chunk_lines, rng)
            instr[r, t] = sum(e.instr_count for e in events if type(e) is BlockExec)
            per_thread.append(events)
        regions.append(per_thread)
    trace = build_trace(spec.thread_count, regions)
    return SyntheticWorkload(
        trace,
        _counters(spec, phases, labels, instr, "A"),
        _counters(spec, phases, labels, instr, "B"),
        labels,
        phases,
    )


def make_drift_scenario(
    spec: WorkloadSpec = WorkloadSpec(), delta: int = 1, phases: Sequence[PhaseSpec] | None = None
) -> tuple[SyntheticWorkload, SyntheticWorkload]:
    """Platform A workload plus a platform B run that executed ``delta`` more regions.

    Models an iterative solver converging after a different number of
    iterations on the second platform. Regions shared by both runs are
    identical.
    """
    n_b = spec.n_regions + delta
    if n_b < 1:
        raise SpecError(f"drift of {delta} leaves no regions")
    if spec.phase_sequence is not None and delta != 0:
        raise SpecError("drift needs a sampled phase sequence")
    return generate(spec, phases), generate(replace(spec, n_regions=n_b), phases)


def format_labels(labels: Sequence[int], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["region_index", "phase_id"])
    for r, ph in enumerate(labels):
        writer.writerow([r, int(ph)])
    return buf.getvalue()


def read_labels(path) -> np.ndarray:
    with open(path) as f:
        rows = [ln for ln in f if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(rows)
    return np.array([int(row["phase_id"]) for row in reader], dtype=np.int64)
