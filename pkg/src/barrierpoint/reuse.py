"""LRU stack distances and their log2-binned histograms.

The stack distance of an access is the number of distinct lines touched
strictly between it and the previous access to the same line. ``LruState``
answers this in O(log n) with a Fenwick tree over access timestamps in which
only each line's most recent access time is marked: the distance is then the
count of marks later than the line's previous timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

COLD = -1
N_FINITE_BUCKETS = 33  # d=0, then floor(log2 d)+1 for d up to 2**32
COLD_BUCKET = N_FINITE_BUCKETS
N_BUCKETS = N_FINITE_BUCKETS + 1
LINE_SHIFT = 6


@numba.njit(cache=True)
def _observe_kernel(ids, last, tree, clock, out):
    n = tree.shape[0] - 1
    for j in range(ids.shape[0]):
        line = ids[j]
        t = clock + j + 1  # 1-based Fenwick position
        prev = last[line]
        if prev == 0:
            out[j] = -1
        else:
            s = 0
            i = t - 1
            while i > 0:
                s += tree[i]
                i -= i & -i
            i = prev
            while i > 0:
                s -= tree[i]
                i -= i & -i
            out[j] = s
            i = prev
            while i <= n:
                tree[i] -= 1
                i += i & -i
        i = t
        while i <= n:
            tree[i] += 1
            i += i & -i
        last[line] = t


@numba.njit(cache=True)
def _build_tree(marks):
    # O(n) Fenwick construction from a 1-based 0/1 mark array.
    n = marks.shape[0] - 1
    tree = marks.copy()
    for i in range(1, n + 1):
        parent = i + (i & -i)
        if parent <= n:
            tree[parent] += tree[i]
    return tree


class LruState:
    """Recency state for one access stream.

    ``line_shift`` maps byte addresses to cache lines (6 = 64-byte lines);
    pass 0 to treat every value as its own line.
    """

    def __init__(self, line_shift: int = LINE_SHIFT, capacity: int = 1024):
        self.line_shift = line_shift
        self._ids: dict[int, int] = {}
        self._last = np.zeros(64, dtype=np.int64)  # 1-based time of last access, 0 = never
        self._tree = np.zeros(capacity + 1, dtype=np.int64)
        self._clock = 0

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def accesses(self) -> int:
        return self._clock

    def _reserve(self, extra: int) -> None:
        need = self._clock + extra
        cap = self._tree.shape[0] - 1
        if need > cap:
            cap = max(need, 2 * cap)
            marks = np.zeros(cap + 1, dtype=np.int64)
            live = self._last[: len(self._ids)]
            marks[live[live > 0]] = 1
            self._tree = _build_tree(marks)

    def _dense_ids(self, lines: np.ndarray) -> np.ndarray:
        uniq, inverse = np.unique(lines, return_inverse=True)
        ids = self._ids
        mapped = np.empty(uniq.shape[0], dtype=np.int64)
        for k, line in enumerate(uniq.tolist()):
            idx = ids.get(line)
            if idx is None:
                idx = ids[line] = len(ids)
            mapped[k] = idx
        if len(ids) > self._last.shape[0]:
            grown = np.zeros(max(len(ids), 2 * self._last.shape[0]), dtype=np.int64)
            grown[: self._last.shape[0]] = self._last
            self._last = grown
        return mapped[inverse.reshape(-1)]

    def observe_many(self, addresses) -> np.ndarray:
        """Stack distance of each address in order; ``COLD`` (-1) on first touch."""
        addrs = np.asarray(addresses, dtype=np.uint64).reshape(-1)
        out = np.empty(addrs.shape[0], dtype=np.int64)
        if addrs.shape[0] == 0:
            return out
        lines = addrs >> np.uint64(self.line_shift)
        ids = self._dense_ids(lines)
        self._reserve(ids.shape[0])
        _observe_kernel(ids, self._last, self._tree, self._clock, out)
        self._clock += ids.shape[0]
        return out

    def observe(self, address: int) -> int:
        return int(self.observe_many([address])[0])


def observe(state: LruState, address: int) -> int:
    return state.observe(address)


def oracle_distance(accesses, position: int) -> int:
    """Reference stack distance by backward scan; no shared code with LruState."""
    if not 0 <= position < len(accesses):
        raise IndexError(f"position {position} out of range [0, {len(accesses)})")
    target = accesses[position]
    seen = set()
    for j in range(position - 1, -1, -1):
        if accesses[j] == target:
            return len(seen)
        seen.add(accesses[j])
    return COLD


@numba.njit(cache=True)
def _oracle_all(keys, n_keys):
    # Same backward scan as oracle_distance, with a generation-stamped seen set.
    out = np.empty(keys.shape[0], dtype=np.int64)
    stamp = np.zeros(n_keys, dtype=np.int64)
    for p in range(keys.shape[0]):
        gen = p + 1
        target = keys[p]
        count = 0
        out[p] = -1
        for j in range(p - 1, -1, -1):
            k = keys[j]
            if k == target:
                out[p] = count
                break
            if stamp[k] != gen:
                stamp[k] = gen
                count += 1
    return out


def oracle_distances(accesses) -> np.ndarray:
    """``oracle_distance`` at every position of a stream of hashable keys."""
    _, keys = np.unique(np.asarray(accesses), return_inverse=True)
    keys = keys.reshape(-1).astype(np.int64)
    return _oracle_all(keys, int(keys.max(initial=-1)) + 1)


def bucket_of(distance: int) -> int:
    if distance == COLD:
        return COLD_BUCKET
    if distance < 0:
        raise ValueError(f"invalid distance {distance}")
    return min(int(distance).bit_length(), N_FINITE_BUCKETS - 1)


def buckets_of(distances: np.ndarray) -> np.ndarray:
    d = np.asarray(distances, dtype=np.int64)
    _, exp = np.frexp(np.maximum(d, 1).astype(np.float64))
    b = np.where(d == 0, 0, np.minimum(exp, N_FINITE_BUCKETS - 1))
    return np.where(d == COLD, COLD_BUCKET, b).astype(np.int64)


@dataclass(frozen=True)
class DistanceHistogram:
    bucket_counts: np.ndarray  # length N_FINITE_BUCKETS
    cold_count: int

    @classmethod
    def empty(cls) -> "DistanceHistogram":
        return cls(np.zeros(N_FINITE_BUCKETS, dtype=np.int64), 0)

    @classmethod
    def from_distances(cls, distances) -> "DistanceHistogram":
        counts = np.bincount(buckets_of(distances), minlength=N_BUCKETS)
        return cls(counts[:N_FINITE_BUCKETS].astype(np.int64), int(counts[COLD_BUCKET]))

    @property
    def total(self) -> int:
        return int(self.bucket_counts.sum()) + self.cold_count

    def as_vector(self) -> np.ndarray:
        """Finite buckets followed by the cold bucket."""
        return np.append(self.bucket_counts, self.cold_count).astype(np.float64)
