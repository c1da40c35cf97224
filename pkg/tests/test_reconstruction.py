import numpy as np
import pytest
from hypothesis import given, strategies as st

from barrierpoint.errors import EmptySelection, MissingRegionMeasurement, RegionCountMismatch
from barrierpoint.formatting import format_speedup
from barrierpoint.measurements import METRICS, aggregate, table_from_arrays
from barrierpoint.reconstruction import (
    Estimate,
    cross_validate,
    error_dump,
    error_report,
    estimate_totals,
    render_csv,
    render_text,
    speedup_from_fraction,
    speedup_report,
    table_report,
    validate,
)
from barrierpoint.selection import BarrierPoint, BarrierPointSet, generate_sets
from barrierpoint.synthgen import WorkloadSpec, generate
from barrierpoint.trace import instruction_weights


def bp_set(pairs, n_regions):
    return BarrierPointSet(tuple(BarrierPoint(r, m) for r, m in pairs), "instructions", n_regions)


def stats_for(region_cycles, roi_cycles=None, runs=2):
    v = np.repeat(np.asarray(region_cycles, float)[None, :, None, None], 4, axis=3)
    v = np.repeat(v, runs, axis=0)
    roi = None
    if roi_cycles is not None:
        roi = np.full((runs, 1, 4), float(roi_cycles))
    return aggregate(table_from_arrays(v, roi))


def test_estimate_examples():
    s = stats_for([50, 50, 50])
    assert estimate_totals(bp_set([(0, 3)], 3), s).totals[0, 0] == 150
    s = stats_for([10, 4])
    assert estimate_totals(bp_set([(0, 2), (1, 5)], 2), s).totals[0, 0] == 40
    with pytest.raises(MissingRegionMeasurement):
        estimate_totals(bp_set([(999, 1)], 3), stats_for([1, 1, 1]))


def test_estimate_std_propagation():
    v = np.zeros((2, 2, 1, 4))
    v[:, 0, 0, 0] = [9, 11]  # std 2**0.5
    v[:, 1, 0, 0] = [4, 4]
    est = estimate_totals(bp_set([(0, 3), (1, 1)], 2), aggregate(table_from_arrays(v)))
    assert est.std[0, 0] == pytest.approx(3 * 2**0.5)


def roi_only(actual):
    actual = np.asarray(actual, float)
    return aggregate(table_from_arrays(np.zeros((2, 0, len(actual), 4)), np.repeat(actual[None], 2, axis=0)))


def test_error_examples():
    actual = np.full((1, 4), 100.0)
    rep = error_report(Estimate(np.full((1, 4), 101.86), np.zeros((1, 4))), roi_only(actual))
    assert rep.error("cycles") == pytest.approx(0.0186)
    rep = error_report(Estimate(actual.copy(), np.zeros((1, 4))), roi_only(actual))
    assert rep.error("instructions") == 0
    two = np.full((2, 4), 100.0)
    rep = error_report(Estimate(np.array([[101.0] * 4, [97.0] * 4]), np.zeros((2, 4))), roi_only(two))
    assert rep.error("l2d_misses") == pytest.approx(0.02)


def test_aggregate_error_mode():
    two = np.full((2, 4), 100.0)
    est = Estimate(np.array([[101.0] * 4, [97.0] * 4]), np.zeros((2, 4)))
    rep = error_report(est, roi_only(two), mode="aggregate")
    assert rep.error("cycles") == pytest.approx(0.01)


def test_zero_actual_excluded():
    actual = np.array([[100.0, 100.0, 0.0, 100.0], [100.0, 100.0, 50.0, 100.0]])
    est = Estimate(np.array([[100.0, 100.0, 3.0, 100.0], [100.0, 100.0, 55.0, 100.0]]), np.zeros((2, 4)))
    rep = error_report(est, roi_only(actual))
    assert rep.zero_actual == ((0, "l1d_misses"),)
    assert rep.error("l1d_misses") == pytest.approx(0.1)


def test_speedup_examples():
    for pct, text in [(0.56, "178.57x"), (3.82, "26.17x"), (38.80, "2.57x")]:
        assert format_speedup(speedup_from_fraction(pct / 100)) == text


def test_speedup_report():
    w = np.array([10.0, 30.0, 60.0, 900.0])
    sp = speedup_report(bp_set([(0, 1), (2, 1)], 4), w)
    assert sp.selected_fraction == pytest.approx(0.07)
    assert sp.serial_speedup == pytest.approx(1000 / 70)
    assert sp.parallel_speedup == pytest.approx(1000 / 60)
    with pytest.raises(EmptySelection):
        speedup_report(bp_set([], 4), w)
    with pytest.raises(EmptySelection):
        speedup_report(bp_set([(0, 1)], 2), [0.0, 5.0])


@given(st.lists(st.floats(1, 1e6), min_size=1, max_size=30), st.data())
def test_speedup_identities(weights, data):
    w = np.array(weights)
    chosen = data.draw(st.sets(st.integers(0, len(w) - 1), min_size=1))
    sp = speedup_report(bp_set([(r, 1.0) for r in sorted(chosen)], len(w)), w)
    assert sp.serial_speedup * sp.selected_fraction == pytest.approx(1.0)
    assert sp.parallel_speedup >= sp.serial_speedup


@given(st.floats(0.001, 1000))
def test_estimate_linear(c):
    rng = np.random.default_rng(5)
    v = rng.random((3, 6, 2, 4)) * 100
    bps = bp_set([(1, 2.5), (4, 3.5)], 6)
    base = estimate_totals(bps, aggregate(table_from_arrays(v))).totals
    scaled = estimate_totals(bps, aggregate(table_from_arrays(v * c))).totals
    assert np.allclose(scaled, c * base)


def test_instruction_error_exactly_zero(clean_workload):
    w = clean_workload
    bps = generate_sets(w.trace, 1, [0]).sets[0]
    # counters whose instruction column equals the trace weights used for the multipliers
    weights = instruction_weights(w.trace)
    v = np.zeros((1, w.trace.n_regions, 1, 4))
    v[0, :, 0, 1] = weights
    v[0, :, 0, 0] = 1.0
    roi = v.sum(axis=1)
    with pytest.warns(UserWarning):
        rep = validate(bps, table_from_arrays(v, roi))
    assert rep.error("instructions") == 0


def test_cross_validate():
    spec = WorkloadSpec(n_regions=60, noise=0.0, runs=2, seed=3)
    w = generate(spec)
    bps = generate_sets(w.trace, 1, [0]).sets[0]
    same = validate(bps, w.counters_a)
    again = cross_validate(bps, w.counters_a)
    assert np.array_equal(again.rel_errors, same.rel_errors) and again.mean_abs_error == same.mean_abs_error
    rep_b = cross_validate(bps, w.counters_b)
    assert max(rep_b.mean_abs_error.values()) <= 1e-9
    shorter = table_from_arrays(w.counters_b.region_values[:, :-1], w.counters_b.roi_values)
    with pytest.raises(RegionCountMismatch) as err:
        cross_validate(bps, shorter)
    assert "60" in str(err.value) and "59" in str(err.value)
    assert err.value.exit_code == 4


def test_table_rows():
    bps = bp_set([(i, 1.0) for i in range(9)], 1208)
    w = np.ones(1208)
    sp = speedup_report(bps, w)
    rep = error_report(Estimate(np.full((1, 4), 101.86), np.zeros((1, 4))), roi_only(np.full((1, 4), 100.0)))
    rows = table_report([bps], [rep], [sp], workload="miniFE", configurations=["A"])
    assert len(rows) == 1 and rows[0].bps_label == "9 / 1208 (0.74%)"
    text = render_text(rows)
    assert "9 / 1208 (0.74%)" in text and "1.86" in text and "134.22x" in text
    csv_text = render_csv(rows)
    assert csv_text.splitlines()[0].startswith("workload,configuration,set,bps_selected")
    assert repr(100.0 * rep.error("cycles")) in csv_text


def test_empty_table():
    assert len(render_csv([]).splitlines()) == 1
    assert len(render_text([]).splitlines()) == 2


def test_error_dump():
    rep = error_report(Estimate(np.full((1, 4), 101.0), np.ones((1, 4))), roi_only(np.full((1, 4), 100.0)))
    lines = error_dump([("cfg", "A", rep)]).splitlines()
    assert lines[0] == "config,metric,platform,error,stddev"
    assert len(lines) == 1 + len(METRICS)
    assert lines[1].startswith("cfg,cycles,A,")
