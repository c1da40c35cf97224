import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from barrierpoint.errors import CounterSyntaxError, InconsistentRunCount, MissingRoi, NegativeValue
from barrierpoint.measurements import (
    HEADER,
    ROI,
    aggregate,
    cov_report,
    format_counters,
    overhead_report,
    parse_counters,
    table_from_arrays,
)

HEAD = ",".join(HEADER) + "\n"


def cell_table(values, roi=None):
    """One region, one thread; ``values`` are the cycles of each run (other metrics copy it)."""
    v = np.asarray(values, dtype=float)
    region = np.repeat(v[:, None, None, None], 4, axis=3)
    roi_v = None if roi is None else np.repeat(np.asarray(roi, float)[:, None, None], 4, axis=2)
    return table_from_arrays(region, roi_v)


def test_parse_two_runs():
    t = parse_counters(HEAD + "0,0,0,1,2,3,4\n1,0,0,5,6,7,8\n")
    assert t.n_runs == 2 and t.n_regions == 1 and t.thread_count == 1
    assert t.roi_values is None
    assert list(t.region_values[1, 0, 0]) == [5, 6, 7, 8]


def test_parse_roi_and_comments():
    t = parse_counters("# hdr\n" + HEAD + "0,0,0,1,2,3,4\n0,ROI,0,1,2,3,4\n\n")
    assert t.roi_values.shape == (1, 1, 4)


def test_runs_ordered_numerically():
    t = parse_counters(HEAD + "10,0,0,10,0,0,0\n2,0,0,2,0,0,0\n")
    assert list(t.region_values[:, 0, 0, 0]) == [2, 10]


def test_missing_run():
    with pytest.raises(InconsistentRunCount):
        parse_counters(HEAD + "0,0,0,1,1,1,1\n1,0,0,1,1,1,1\n0,1,0,1,1,1,1\n")


def test_missing_region_or_thread():
    with pytest.raises(InconsistentRunCount):
        parse_counters(HEAD + "0,0,0,1,1,1,1\n0,2,0,1,1,1,1\n")
    with pytest.raises(InconsistentRunCount):
        parse_counters(HEAD + "0,0,1,1,1,1,1\n")


def test_negative_value():
    with pytest.raises(NegativeValue):
        parse_counters(HEAD + "0,0,0,-3,1,1,1\n")


@pytest.mark.parametrize(
    "body",
    [
        "",
        "run,scope,thread,cycles\n",
        HEAD + "0,0,0,1,1,1\n",
        HEAD + "0,x,0,1,1,1,1\n",
        HEAD + "0,0,0,abc,1,1,1\n",
        HEAD + "0,0,0,nan,1,1,1\n",
        HEAD + "0,0,0,1,1,1,1\n0,0,0,1,1,1,1\n",
    ],
)
def test_syntax_errors(body):
    with pytest.raises(CounterSyntaxError):
        parse_counters(body)


def test_round_trip(noisy_workload):
    t = noisy_workload.counters_a
    again = parse_counters(format_counters(t))
    assert np.array_equal(again.region_values, t.region_values)
    assert np.array_equal(again.roi_values, t.roi_values)


def test_aggregate_examples():
    s = aggregate(cell_table([10, 10, 10]))
    assert s.region_mean[0, 0, 0] == 10 and s.region_std[0, 0, 0] == 0 and s.region_cov[0, 0, 0] == 0
    s = aggregate(cell_table([9, 10, 11]))
    assert s.region_std[0, 0, 0] == pytest.approx(1.0)
    assert s.region_cov[0, 0, 0] == pytest.approx(0.10)
    s7 = aggregate(cell_table([63, 70, 77]))
    assert s7.region_cov[0, 0, 0] == pytest.approx(0.10)


def test_single_run_warns():
    with pytest.warns(UserWarning, match="single run"):
        s = aggregate(cell_table([5]))
    assert s.region_std[0, 0, 0] == 0


runs = arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(1, 3), st.integers(1, 2), st.just(4)),
              elements=st.floats(0, 1e6))


@given(runs, st.randoms(use_true_random=False), st.floats(0.01, 100))
def test_permutation_and_scale_invariance(values, rnd, c):
    base = aggregate(table_from_arrays(values))
    order = list(range(values.shape[0]))
    rnd.shuffle(order)
    perm = aggregate(table_from_arrays(values[order]))
    assert np.allclose(perm.region_mean, base.region_mean)
    assert np.allclose(perm.region_std, base.region_std)
    scaled = aggregate(table_from_arrays(values * c))
    ok = ~np.isnan(base.region_cov)
    assert np.allclose(scaled.region_cov[ok], base.region_cov[ok], atol=1e-9)


def test_cov_report():
    rng = np.random.default_rng(0)
    stable = np.full((20, 3, 2, 4), 1000.0)
    assert cov_report(aggregate(table_from_arrays(stable))) == []
    wild = stable.copy()
    wild[:, 1, 0, 2] = 1000 * (1 + 0.57 * rng.standard_normal(20)).clip(0)
    flags = cov_report(aggregate(table_from_arrays(wild)), 0.05)
    assert [(f.scope, f.thread_id, f.metric) for f in flags] == [(1, 0, "l1d_misses")]
    assert cov_report(aggregate(table_from_arrays(wild)), 1.0) == []


def test_cov_report_sorted_and_roi():
    v = np.full((3, 2, 1, 4), 10.0)
    v[:, 0, 0, 0] = [9, 10, 11]
    v[:, 1, 0, 1] = [5, 10, 15]
    roi = np.full((3, 1, 4), 100.0)
    roi[:, 0, 3] = [80, 100, 120]
    flags = cov_report(aggregate(table_from_arrays(v, roi)), 0.05)
    assert [f.cov for f in flags] == sorted((f.cov for f in flags), reverse=True)
    assert (ROI, 0, "l2d_misses") in [(f.scope, f.thread_id, f.metric) for f in flags]
    assert len(flags) == 3


def test_overhead_examples():
    r = overhead_report(aggregate(cell_table([103, 103], roi=[100, 100])))
    assert r.overhead[0, 0] == pytest.approx(0.03)
    assert overhead_report(aggregate(cell_table([100, 100], roi=[100, 100]))).average == 0
    zero = overhead_report(aggregate(cell_table([5, 5], roi=[0, 0])))
    assert np.isnan(zero.overhead).all() and len(zero.flagged) == 4
    with pytest.raises(MissingRoi):
        overhead_report(aggregate(cell_table([5, 6])))


@given(st.floats(0, 1e6), st.floats(0.001, 1e6))
def test_overhead_nonnegative(summed, roi):
    r = overhead_report(aggregate(cell_table([summed, summed], roi=[roi, roi])))
    assert r.overhead[0, 0] >= 0
