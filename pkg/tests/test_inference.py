import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netspread.errors import AnalysisError, DegenerateDataError
from netspread.inference import (
    battery_column_order,
    box_stats,
    mean_diff_ci,
    min_max_standardize,
    quadrant_classify,
    stage_ttest_battery,
)
from netspread.model import parse_table

# Frozen Welch interval for the hand example {0,.1,-.1,0} vs {1,1.1,.9,1}:
# cross-checked against statsmodels CompareMeans.tconfint_diff(usevar=
# "unequal") and an mpmath inverse-incomplete-beta t quantile (nu = 6,
# t* = 2.44691185114497).
HAND_CI = (-1.1412725215941832, -0.8587274784058166)


def test_standardize_endpoints():
    np.testing.assert_allclose(min_max_standardize([2.0, 4.0, 6.0]),
                               [0.0, 0.5, 1.0])


def test_standardize_identity_case():
    x = np.array([0.0, 0.25, 0.75, 1.0])
    np.testing.assert_array_equal(min_max_standardize(x), x)


def test_standardize_matches_per_element_formula():
    rng = np.random.default_rng(12)
    x = rng.normal(3.0, 10.0, 50)
    got = min_max_standardize(x)
    lo, hi = x.min(), x.max()
    for g, v in zip(got, x):
        assert g == pytest.approx((v - lo) / (hi - lo), abs=1e-12)


def test_standardize_guards_and_nan_passthrough():
    with pytest.raises(DegenerateDataError, match="constant"):
        min_max_standardize([5.0, 5.0])
    out = min_max_standardize([1.0, math.nan, 3.0])
    assert math.isnan(out[1]) and out[0] == 0.0 and out[2] == 1.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40, unique=True))
def test_standardize_weakly_preserves_order(values):
    # strict rank equality needs gaps wider than an ulp of the range; the
    # affine map itself is monotone
    x = np.array(values)
    got = min_max_standardize(x)
    order = np.argsort(x, kind="stable")
    assert (np.diff(got[order]) >= 0).all()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-10**6, 10**6), min_size=2, max_size=40,
                unique=True))
def test_standardize_exact_rank_equality_on_separated_values(values):
    x = np.array(values, dtype=float)
    got = min_max_standardize(x)
    assert list(np.argsort(got, kind="stable")) == list(np.argsort(x, kind="stable"))


def test_box_stats_one_to_nine():
    b = box_stats(np.arange(1.0, 10.0))
    assert (b.median, b.q1, b.q3) == (5.0, 3.0, 7.0)
    assert b.iqr == 4.0
    assert (b.whisker_lo, b.whisker_hi) == (1.0, 9.0)
    assert b.outliers == ()


def test_box_stats_far_point_is_outlier():
    b = box_stats(list(range(1, 10)) + [100.0])
    assert b.outliers == (100.0,)
    assert b.whisker_hi == 9.0


def test_box_stats_single_value():
    b = box_stats([7.0])
    assert b.median == b.q1 == b.q3 == 7.0
    assert b.outliers == () and b.n == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=60))
def test_box_stats_partition(values):
    b = box_stats(values)
    inside = [v for v in values
              if b.q1 - 1.5 * b.iqr <= v <= b.q3 + 1.5 * b.iqr]
    assert len(inside) + len(b.outliers) == len(values)
    assert b.q1 <= b.median <= b.q3


def test_mean_diff_identical_groups_not_significant():
    g = [0.2, 0.4, 0.6, 0.8]
    r = mean_diff_ci(g, g)
    assert r.diff == 0.0
    assert r.ci_lo < 0.0 < r.ci_hi
    assert not r.significant


def test_mean_diff_hand_welch_example():
    r = mean_diff_ci([0.0, 0.1, -0.1, 0.0], [1.0, 1.1, 0.9, 1.0])
    assert r.diff == pytest.approx(-1.0, abs=1e-12)
    se = math.sqrt(2 * (0.02 / 3) / 4)
    assert r.diff / se == pytest.approx(-17.3205, abs=1e-3)
    assert r.ci_lo == pytest.approx(HAND_CI[0], abs=1e-9)
    assert r.ci_hi == pytest.approx(HAND_CI[1], abs=1e-9)
    assert r.significant


def test_mean_diff_swap_mirrors_interval():
    a = [0.0, 0.1, -0.1, 0.0]
    b = [1.0, 1.1, 0.9, 1.0]
    fwd = mean_diff_ci(a, b)
    rev = mean_diff_ci(b, a)
    assert rev.diff == -fwd.diff
    assert rev.ci_lo == pytest.approx(-fwd.ci_hi, abs=1e-12)
    assert rev.ci_hi == pytest.approx(-fwd.ci_lo, abs=1e-12)


def test_mean_diff_pooled_matches_welch_for_balanced_groups():
    a = [0.0, 0.1, -0.1, 0.0]
    b = [1.0, 1.1, 0.9, 1.0]
    welch = mean_diff_ci(a, b)
    pooled = mean_diff_ci(a, b, pooled=True)
    assert pooled.ci_lo == pytest.approx(welch.ci_lo, abs=1e-12)
    assert pooled.ci_hi == pytest.approx(welch.ci_hi, abs=1e-12)


def test_mean_diff_guards():
    with pytest.raises(AnalysisError, match="at least 2"):
        mean_diff_ci([1.0], [1.0, 2.0])
    with pytest.raises(AnalysisError, match="finite"):
        mean_diff_ci([1.0, math.nan], [1.0, 2.0])


def test_mean_diff_constant_groups_point_interval():
    r = mean_diff_ci([1.0, 1.0, 1.0], [0.0, 0.0])
    assert (r.ci_lo, r.ci_hi) == (1.0, 1.0)
    assert r.significant
    same = mean_diff_ci([1.0, 1.0], [1.0, 1.0])
    assert not same.significant


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_significance_iff_zero_excluded(data):
    a = data.draw(st.lists(st.floats(-10, 10), min_size=2, max_size=15))
    b = data.draw(st.lists(st.floats(-10, 10), min_size=2, max_size=15))
    r = mean_diff_ci(a, b)
    assert r.ci_lo <= r.diff <= r.ci_hi
    assert r.significant == (r.ci_lo > 0 or r.ci_hi < 0)


BATTERY_CSV = """\
code,DFW,DEG,GI,APRT,shoes
AAA,10,30,80,5,1
BBB,20,28,75,6,2
CCC,30,25,,5,3
DDD,40,27,78,6,4
EEE,60,5,40,5,5
FFF,70,4,42,6,6
GGG,80,6,45,5,7
HHH,90,3,41,6,8
"""


def _battery(cut=44.0, **kwargs):
    table = parse_table(BATTERY_CSV)
    return stage_ttest_battery(table, cut, **kwargs)


def test_battery_orders_by_group_then_symbol():
    battery = _battery()
    assert [r.variable for r in battery.results] == ["DEG", "GI", "APRT", "shoes"]
    assert [r.group for r in battery.results] == ["1D", "2D", "3D", "extra"]


def test_battery_separated_column_significant_balanced_not():
    battery = _battery()
    by_name = {r.variable: r for r in battery.results}
    assert by_name["DEG"].significant
    assert by_name["GI"].significant
    # APRT alternates 5/6 identically in both groups
    assert by_name["APRT"].diff == pytest.approx(0.0, abs=1e-12)
    assert not by_name["APRT"].significant


def test_battery_reports_dropped_missing_cells():
    battery = _battery()
    by_name = {r.variable: r for r in battery.results}
    assert by_name["GI"].n_dropped == 1
    assert by_name["GI"].n_a == 3 and by_name["GI"].n_b == 4


def test_battery_untestable_column_continues():
    table = parse_table(
        "code,DFW,GDP\nAAA,10,1\nBBB,20,2\nCCC,30,3\nDDD,90,4\n")
    battery = stage_ttest_battery(table, 44.0)
    assert battery.results == ()
    assert len(battery.untestable) == 1
    assert battery.untestable[0].variable == "GDP"
    assert "fewer than 2" in battery.untestable[0].reason


def test_battery_invariant_under_column_permutation():
    base = parse_table(BATTERY_CSV)
    reordered = parse_table(
        "code,GI,shoes,DFW,APRT,DEG\n"
        + "\n".join(
            ",".join([row[0], row[3], row[5], row[1], row[4], row[2]])
            for row in (line.split(",")
                        for line in BATTERY_CSV.strip().splitlines()[1:]))
        + "\n")
    r1 = stage_ttest_battery(base, 44.0)
    r2 = stage_ttest_battery(reordered, 44.0)
    assert [r.variable for r in r1.results] == [r.variable for r in r2.results]
    for a, b in zip(r1.results, r2.results):
        assert a.diff == pytest.approx(b.diff, abs=1e-15)
        assert a.ci_lo == pytest.approx(b.ci_lo, abs=1e-15)


def test_battery_split_then_standardize_flag():
    battery = _battery(split_first=True)
    assert battery.standardization == "split-then-standardize"
    by_name = {r.variable: r for r in battery.results}
    # each group spans [0, 1] after per-group scaling: means are comparable
    assert abs(by_name["DEG"].diff) < 0.5


def test_battery_missing_dfw_rows_counted():
    table = parse_table(
        "code,DFW,GDP\nAAA,10,1\nBBB,,2\nCCC,30,3\nDDD,90,4\nEEE,91,5\n")
    battery = stage_ttest_battery(table, 44.0)
    assert battery.n_missing_dfw == 1


def test_column_order_helper():
    names = ["shoes", "APRT", "DEG", "GI", "CST", "ECCFC", "CB.PAIR"]
    assert battery_column_order(names) == [
        "DEG", "CB.PAIR", "ECCFC", "GI", "CST", "APRT", "shoes"]


def test_quadrant_examples():
    assert quadrant_classify(30, 20).label == "Q4"
    assert quadrant_classify(50, 1).label == "Q2"
    assert quadrant_classify(44, 15).label == "Q1"
    assert quadrant_classify(50, 20).label == "Q3"
    q = quadrant_classify(30, 20, t_cut=10.0, k_cut=30.0)
    assert (q.label, q.t_cut, q.k_cut) == ("Q2", 10.0, 30.0)
