import numpy as np
import pytest
from hypothesis import given, strategies as st

from barrierpoint.reuse import (
    COLD,
    COLD_BUCKET,
    DistanceHistogram,
    LruState,
    bucket_of,
    buckets_of,
    observe,
    oracle_distance,
    oracle_distances,
)

A, B, C = 0x1000, 0x2000, 0x3000


def run(stream, line_shift=6):
    s = LruState(line_shift)
    return [observe(s, a) for a in stream]


@pytest.mark.parametrize(
    "stream,expected",
    [
        ([A, A], [COLD, 0]),
        ([A, B, A], [COLD, COLD, 1]),
        ([A, B, C, A], [COLD, COLD, COLD, 2]),
    ],
)
def test_observe_examples(stream, expected):
    assert run(stream) == expected
    assert [oracle_distance(stream, i) for i in range(len(stream))] == expected


def test_same_line_is_one_line():
    # 0x1000 and 0x1038 share a 64-byte line
    assert run([0x1000, 0x1038]) == [COLD, 0]
    assert run([0x1000, 0x1038], line_shift=0) == [COLD, COLD]


def test_oracle_examples():
    assert oracle_distance(["A", "B", "A"], 2) == 1
    assert oracle_distance(["A"], 0) == COLD
    with pytest.raises(IndexError):
        oracle_distance(["A"], 1)


def test_scalar_and_bulk_agree(rng):
    stream = rng.integers(0, 50, size=2000)
    bulk = LruState(0).observe_many(stream)
    assert list(bulk) == run(stream, line_shift=0)


def test_state_carries_across_batches(rng):
    stream = rng.integers(0, 40, size=3000)
    s = LruState(0, capacity=8)  # forces several tree rebuilds
    parts = [s.observe_many(chunk) for chunk in np.array_split(stream, 7)]
    assert np.array_equal(np.concatenate(parts), oracle_distances(stream))
    assert s.accesses == 3000 and len(s) == len(set(stream.tolist()))


@given(st.lists(st.integers(0, 30), max_size=200))
def test_observe_matches_scan_oracle(stream):
    got = LruState(0).observe_many(np.array(stream, dtype=np.uint64))
    assert list(got) == [oracle_distance(stream, i) for i in range(len(stream))]


@given(st.lists(st.integers(0, 2**20), max_size=300))
def test_bulk_oracle_matches_scalar_oracle(stream):
    assert list(oracle_distances(stream)) == [oracle_distance(stream, i) for i in range(len(stream))]


@given(st.lists(st.integers(0, 64), min_size=1, max_size=300))
def test_distance_below_distinct_seen(stream):
    d = LruState(0).observe_many(stream)
    seen = set()
    for a, x in zip(stream, d):
        if x != COLD:
            assert x < len(seen)
        seen.add(a)


@given(st.lists(st.integers(0, 64), min_size=1, max_size=100))
def test_immediate_reaccess_is_zero(stream):
    doubled = [a for x in stream for a in (x, x)]
    d = LruState(0).observe_many(doubled)
    assert np.all(d[1::2] == 0)


@given(st.lists(st.integers(0, 1000), max_size=300))
def test_histogram_conservation(stream):
    h = DistanceHistogram.from_distances(LruState(0).observe_many(stream))
    assert h.total == len(stream)
    assert h.cold_count == len(set(stream))
    assert h.as_vector().shape == (34,)


@pytest.mark.parametrize("d,b", [(0, 0), (1, 1), (2, 2), (3, 2), (4, 3), (7, 3), (8, 4), (2**31, 32), (2**40, 32)])
def test_bucket_examples(d, b):
    assert bucket_of(d) == b


def test_cold_bucket():
    assert bucket_of(COLD) == COLD_BUCKET == 33


@given(st.lists(st.integers(-1, 2**40), max_size=50))
def test_vector_bucket_matches_scalar(ds):
    assert list(buckets_of(np.array(ds, dtype=np.int64))) == [bucket_of(d) for d in ds]
