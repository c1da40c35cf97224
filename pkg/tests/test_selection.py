import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from barrierpoint.clustering import ClusteringResult
from barrierpoint.errors import AllFiltered, InputError
from barrierpoint.formatting import exact_percent, format_percent, format_speedup, selected_label
from barrierpoint.selection import (
    BarrierPoint,
    BarrierPointSet,
    DiscoveryParams,
    choose_representatives,
    filter_significant,
    format_set,
    generate_sets,
    read_set,
    set_summary,
)
from barrierpoint.trace import instruction_weights


def clustering(points, assignment):
    points = np.asarray(points, dtype=float).reshape(len(assignment), -1)
    assignment = np.asarray(assignment)
    k = int(assignment.max()) + 1
    centroids = np.array([points[assignment == c].mean(axis=0) for c in range(k)])
    return ClusteringResult(k, assignment, centroids, 0.0, 0.0, 0, 1)


def test_count_mode_identical_points():
    c = clustering([[1.0], [1.0], [1.0]], [0, 0, 0])
    bps = choose_representatives(c, c.centroids[[0, 0, 0]], mode="count")
    assert len(bps) == 1 and bps.entries[0] == BarrierPoint(0, 3.0)


def test_instruction_mode_multiplier():
    c = clustering([[0.0], [2.0]], [0, 0])  # tie at the centroid goes to region 0
    bps = choose_representatives(c, [[0.0], [2.0]], [100, 300])
    assert bps.entries == (BarrierPoint(0, 4.0),)


def test_singletons():
    pts = np.arange(5.0)[:, None]
    bps = choose_representatives(clustering(pts, [3, 1, 4, 0, 2]), pts, np.ones(5))
    assert bps.region_indices == [0, 1, 2, 3, 4]
    assert list(bps.multipliers) == [1.0] * 5


def test_nearest_to_centroid_is_representative():
    pts = np.array([[0.0], [4.0], [5.0], [6.0], [10.0]])
    bps = choose_representatives(clustering(pts, [0, 0, 0, 0, 0]), pts, np.ones(5))
    assert bps.region_indices == [2]


def test_zero_weight_representative_falls_back_to_count():
    pts = np.array([[0.0], [1.0], [2.0]])
    with pytest.warns(UserWarning, match="zero instructions"):
        bps = choose_representatives(clustering(pts, [0, 0, 0]), pts, [5.0, 0.0, 5.0])
    assert bps.entries == (BarrierPoint(1, 3.0),)


@st.composite
def random_clusterings(draw):
    n = draw(st.integers(1, 60))
    k = draw(st.integers(1, n))
    assignment = np.array(draw(st.permutations(list(range(k)) + draw(st.lists(st.integers(0, k - 1), min_size=n - k, max_size=n - k)))))
    weights = np.array(draw(st.lists(st.floats(1.0, 1e9), min_size=n, max_size=n)))
    pts = np.array(draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n)))[:, None]
    return pts, assignment, weights


@given(random_clusterings())
def test_instruction_weighted_identity(case):
    pts, assignment, w = case
    bps = choose_representatives(clustering(pts, assignment), pts, w)
    est = (bps.multipliers * w[bps.region_indices]).sum()
    assert abs(est - w.sum()) <= 1e-12 * w.sum()


@given(random_clusterings())
def test_count_mode_exact_when_clusters_uniform(case):
    pts, assignment, _ = case
    per_cluster = np.arange(1, assignment.max() + 2) * 7.5
    metric = per_cluster[assignment]  # every region in a cluster has the same value
    bps = choose_representatives(clustering(pts, assignment), pts, mode="count")
    assert (bps.multipliers * metric[bps.region_indices]).sum() == pytest.approx(metric.sum(), rel=1e-12)
    assert bps.multipliers.sum() == len(pts)


def three_entry_set():
    w = np.array([850.0, 100.0, 5.0])
    return BarrierPointSet(tuple(BarrierPoint(i, 1.0) for i in range(3)), "instructions", 3), w


def test_filter_examples():
    bps, w = three_entry_set()
    assert filter_significant(bps, 0.0, w) == bps
    kept = filter_significant(bps, 0.01, w)
    assert kept.region_indices == [0, 1]
    assert (kept.multipliers * w[:2]).sum() == pytest.approx(w.sum(), rel=1e-12)
    with pytest.raises(AllFiltered):
        filter_significant(bps, 0.99, w)


@given(st.lists(st.tuples(st.floats(0.1, 100), st.floats(1, 1e6)), min_size=1, max_size=20), st.floats(0, 0.3))
def test_filter_preserves_weighted_sum(entries, thr):
    bps = BarrierPointSet(tuple(BarrierPoint(i, m) for i, (m, _) in enumerate(entries)), "instructions", len(entries))
    w = np.array([x for _, x in entries])
    before = (bps.multipliers * w).sum()
    try:
        kept = filter_significant(bps, thr, w)
    except AllFiltered:
        return
    after = (kept.multipliers * w[kept.region_indices]).sum()
    assert abs(after - before) <= 1e-12 * before


def test_summaries():
    bps = BarrierPointSet(tuple(BarrierPoint(i, 1.0) for i in range(5)), "instructions", 1000)
    w = np.ones(1000)
    s = set_summary(bps, w)
    assert s.label == "5 / 1000 (0.5%)"
    w = np.full(1000, 1.0)
    w[:5] = 0.0382 * 995 / (1 - 0.0382) / 5
    assert format_percent(set_summary(bps, w).selected_fraction) == "3.82"
    single = BarrierPointSet((BarrierPoint(0, 1.0),), "instructions", 1)
    s = set_summary(single, [42.0])
    assert s.selected_fraction == 1.0 and s.largest_fraction == 1.0


@pytest.mark.parametrize(
    "n,N,text",
    [(5, 1000, "0.5"), (9, 1208, "0.74"), (17, 810, "2.09"), (10, 197, "5.07"), (4, 10, "40"), (10, 9840, "0.10"), (1, 1, "100")],
)
def test_percent_labels(n, N, text):
    assert exact_percent(n, N) == text
    assert selected_label(n, N) == f"{n} / {N} ({text}%)"


def test_display_truncates():
    assert format_speedup(100 / 3.82) == "26.17x"
    assert format_speedup(3.0) == "3.00x"
    assert format_percent(0.0056) == "0.56"


def test_set_file_round_trip():
    bps = BarrierPointSet((BarrierPoint(3, 1 / 3), BarrierPoint(7, 12.5)), "count", 10, 4, 5, 0.2, 0.1)
    again = read_set(format_set(bps, ["config: {}"]))
    assert again == bps
    assert read_set(io.StringIO(format_set(bps))) == bps
    with pytest.raises(InputError):
        read_set("# nothing\nregion_index,multiplier\nx,1\n")


def test_generate_sets(clean_workload):
    tr = clean_workload.trace
    col = generate_sets(tr, 10, range(10))
    assert len(col) == 10 and len(col.sets) == 10
    assert col.seeds == tuple(range(10))
    ref = sorted(col.sets[0].multipliers)
    for bps in col.sets:
        assert sorted(bps.multipliers) == pytest.approx(ref)
        # every set picks one region from each phase
        assert sorted(clean_workload.labels[bps.region_indices]) == [0, 1, 2, 3, 4]
    twice = generate_sets(tr, 2, [3, 3])
    assert twice.sets[0] == twice.sets[1]
    with pytest.raises(ValueError):
        generate_sets(tr, 3, [0, 1])


def test_generate_sets_with_filter(clean_workload):
    tr = clean_workload.trace
    w = instruction_weights(tr)
    shares = np.bincount(clean_workload.labels, weights=w) / w.sum()
    thr = float(np.median(shares))
    full = generate_sets(tr, 1, [0]).sets[0]
    kept = generate_sets(tr, 1, [0], DiscoveryParams(significance=thr)).sets[0]
    assert sorted(clean_workload.labels[kept.region_indices]) == sorted(np.flatnonzero(shares >= thr))
    assert (kept.multipliers * w[kept.region_indices]).sum() == pytest.approx(
        (full.multipliers * w[full.region_indices]).sum(), rel=1e-12
    )
