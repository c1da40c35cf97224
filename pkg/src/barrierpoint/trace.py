"""Barrier-delimited workload traces.

Text format, one record per line (``#`` starts a comment)::

    T <thread_count>               first record, exactly once
    B <tid> <block_id> <instr>     basic block execution
    M <tid> <address_hex>          memory access, hex without 0x
    R                              barrier end, closes the region for all threads
    E                              region-of-interest end, exactly once, last
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, TextIO, Union

import numpy as np

from .errors import EmptyTrace, MissingRoiEnd, ThreadIdOutOfRange, TraceSyntaxError


class BlockExec(NamedTuple):
    thread_id: int
    block_id: int
    instr_count: int


class MemAccess(NamedTuple):
    thread_id: int
    address: int


class BarrierEnd(NamedTuple):
    pass


class RoiEnd(NamedTuple):
    pass


TraceEvent = Union[BlockExec, MemAccess, BarrierEnd, RoiEnd]
ThreadEvent = Union[BlockExec, MemAccess]

_ADDRESS_LIMIT = 1 << 64


@dataclass(frozen=True)
class RegionTrace:
    region_index: int
    per_thread_events: tuple[tuple[ThreadEvent, ...], ...]

    def blocks(self, thread_id: int) -> list[BlockExec]:
        return [e for e in self.per_thread_events[thread_id] if type(e) is BlockExec]

    def addresses(self, thread_id: int) -> np.ndarray:
        return np.fromiter(
            (e.address for e in self.per_thread_events[thread_id] if type(e) is MemAccess),
            dtype=np.uint64,
        )


@dataclass(frozen=True)
class WorkloadTrace:
    thread_count: int
    regions: tuple[RegionTrace, ...]
    block_vocabulary: tuple[int, ...] = field(default=())

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def region(self, region_index: int) -> RegionTrace:
        if not 0 <= region_index < len(self.regions):
            raise IndexError(f"region {region_index} out of range [0, {len(self.regions)})")
        return self.regions[region_index]


class RegionWeight(NamedTuple):
    per_thread: tuple[int, ...]
    total: int


def build_trace(thread_count: int, regions: Iterable[Iterable[Iterable[ThreadEvent]]]) -> WorkloadTrace:
    """Assemble a WorkloadTrace from nested ``[region][thread][event]`` sequences."""
    built = []
    vocab: set[int] = set()
    for r, per_thread in enumerate(regions):
        threads = tuple(tuple(events) for events in per_thread)
        if len(threads) != thread_count:
            raise ValueError(f"region {r} has {len(threads)} thread streams, expected {thread_count}")
        for events in threads:
            vocab.update(e.block_id for e in events if type(e) is BlockExec)
        built.append(RegionTrace(r, threads))
    if not built:
        raise EmptyTrace("trace contains no regions")
    return WorkloadTrace(thread_count, tuple(built), tuple(sorted(vocab)))


def _int(token: str, line_no: int, base: int = 10) -> int:
    try:
        return int(token, base)
    except ValueError:
        raise TraceSyntaxError(f"bad integer {token!r}", line_no) from None


def parse_trace(source: Union[str, TextIO, Iterable[str]]) -> WorkloadTrace:
    """Parse the text trace format.

    ``source`` may be the whole text as a string, an open text stream, or any
    iterable of lines. Zero-instruction regions are accepted with a warning.
    """
    lines = io.StringIO(source) if isinstance(source, str) else source

    thread_count = None
    regions: list[list[list[ThreadEvent]]] = []
    current: list[list[ThreadEvent]] = []
    pending = 0  # events since the last barrier
    saw_end = False

    for line_no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if saw_end:
            raise TraceSyntaxError("content after region-of-interest end", line_no)
        fields = text.split()
        tag = fields[0]

        if thread_count is None:
            if tag != "T" or len(fields) != 2:
                raise TraceSyntaxError("first record must be 'T <thread_count>'", line_no)
            thread_count = _int(fields[1], line_no)
            if thread_count < 1:
                raise TraceSyntaxError("thread count must be positive", line_no)
            current = [[] for _ in range(thread_count)]
            continue

        if tag == "B":
            if len(fields) != 4:
                raise TraceSyntaxError("expected 'B <tid> <block_id> <instr_count>'", line_no)
            tid = _int(fields[1], line_no)
            block = _int(fields[2], line_no)
            instr = _int(fields[3], line_no)
            if not 0 <= tid < thread_count:
                raise ThreadIdOutOfRange(tid, thread_count, line_no)
            if instr < 1:
                raise TraceSyntaxError("instruction count must be >= 1", line_no)
            current[tid].append(BlockExec(tid, block, instr))
            pending += 1
        elif tag == "M":
            if len(fields) != 3:
                raise TraceSyntaxError("expected 'M <tid> <address_hex>'", line_no)
            tid = _int(fields[1], line_no)
            if fields[2].lower().startswith("0x"):
                raise TraceSyntaxError("addresses are written without a 0x prefix", line_no)
            address = _int(fields[2], line_no, 16)
            if not 0 <= tid < thread_count:
                raise ThreadIdOutOfRange(tid, thread_count, line_no)
            if not 0 <= address < _ADDRESS_LIMIT:
                raise TraceSyntaxError("address outside 64-bit range", line_no)
            current[tid].append(MemAccess(tid, address))
            pending += 1
        elif tag == "R":
            if len(fields) != 1:
                raise TraceSyntaxError("'R' takes no fields", line_no)
            regions.append(current)
            current = [[] for _ in range(thread_count)]
            pending = 0
        elif tag == "E":
            if len(fields) != 1:
                raise TraceSyntaxError("'E' takes no fields", line_no)
            saw_end = True
        elif tag == "T":
            raise TraceSyntaxError("duplicate 'T' record", line_no)
        else:
            raise TraceSyntaxError(f"unknown tag {tag!r}", line_no)

    if thread_count is None:
        raise EmptyTrace("trace has no 'T' record")
    if not saw_end:
        raise MissingRoiEnd("trace has no 'E' record")
    if pending:
        regions.append(current)

    trace = build_trace(thread_count, regions)
    empty = [r.region_index for r in trace.regions if region_instruction_weight(trace, r.region_index).total == 0]
    if empty:
        warnings.warn(f"{len(empty)} region(s) execute zero instructions (first: {empty[0]})", stacklevel=2)
    return trace


def load_trace(path) -> WorkloadTrace:
    with open(path) as f:
        return parse_trace(f)


def write_trace(trace: WorkloadTrace, out: TextIO, header: Iterable[str] = ()) -> None:
    """Serialize ``trace``; events are written thread by thread inside each region."""
    for line in header:
        out.write(f"# {line}\n")
    out.write(f"T {trace.thread_count}\n")
    for region in trace.regions:
        for events in region.per_thread_events:
            for e in events:
                if type(e) is BlockExec:
                    out.write(f"B {e.thread_id} {e.block_id} {e.instr_count}\n")
                else:
                    out.write(f"M {e.thread_id} {e.address:x}\n")
        out.write("R\n")
    out.write("E\n")


def format_trace(trace: WorkloadTrace) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def region_instruction_weight(trace: WorkloadTrace, region_index: int) -> RegionWeight:
    region = trace.region(region_index)
    per_thread = tuple(
        sum(e.instr_count for e in events if type(e) is BlockExec) for events in region.per_thread_events
    )
    return RegionWeight(per_thread, sum(per_thread))


def instruction_weights(trace: WorkloadTrace) -> np.ndarray:
    """Total instruction count of every region, as a float array."""
    return np.array(
        [region_instruction_weight(trace, r).total for r in range(trace.n_regions)], dtype=np.float64
    )
