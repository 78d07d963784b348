"""Two-group statistical inference and descriptive summaries.

Quantiles use linear interpolation of order statistics (type R-7, the
rule recorded in output metadata).  Mean-difference confidence intervals
default to the Welch unequal-variance form; a pooled variant is exposed
for sensitivity analysis.  Significance is zero-exclusion of the CI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import AnalysisError, DegenerateDataError
from .model import GROUP_1D, GROUP_2D, GROUP_3D, VariablesTable, column_group

QUANTILE_RULE = "linear interpolation of order statistics (R-7)"

_GROUP_RANK = {"1D": 0, "2D": 1, "3D": 2, "extra": 3}
_SYMBOL_RANK = {name: i for group in (GROUP_1D, GROUP_2D, GROUP_3D)
                for i, name in enumerate(group)}


@dataclass(frozen=True)
class BoxStats:
    """Five-number boxplot summary with Tukey 1.5*IQR whiskers."""

    median: float
    q1: float
    q3: float
    iqr: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple[float, ...]
    n: int


@dataclass(frozen=True)
class MeanDiffResult:
    """Two-group standardized mean difference with its confidence interval."""

    variable: str
    group: str
    mean_a: float
    mean_b: float
    diff: float
    ci_lo: float
    ci_hi: float
    significant: bool
    n_a: int
    n_b: int
    n_dropped: int = 0


@dataclass(frozen=True)
class UntestableColumn:
    """Battery column that could not be tested, with the reason."""

    variable: str
    group: str
    n_a: int
    n_b: int
    reason: str


@dataclass(frozen=True)
class TTestBattery:
    """Per-column mean-difference results for a two-stage split."""

    results: tuple[MeanDiffResult, ...]
    untestable: tuple[UntestableColumn, ...]
    cut: float
    n_missing_dfw: int
    variance: str  # "welch" or "pooled"
    standardization: str  # "standardize-then-split" or "split-then-standardize"


@dataclass(frozen=True)
class Quadrant:
    """Position of a (t, k) point in the plane partitioned by the two cuts."""

    label: str  # Q1..Q4
    t_cut: float
    k_cut: float


def min_max_standardize(values) -> np.ndarray:
    """Affinely map finite values onto [0, 1]; NaN passes through as missing."""
    x = np.asarray(values, dtype=float)
    finite = x[np.isfinite(x)]
    if len(finite) == 0:
        raise DegenerateDataError("no finite values to standardize")
    lo, hi = float(finite.min()), float(finite.max())
    if hi <= lo:
        raise DegenerateDataError("constant vector cannot be standardized")
    return (x - lo) / (hi - lo)


def box_stats(values) -> BoxStats:
    """Median, quartiles, whiskers and outliers of a sample (R-7 quantiles)."""
    x = np.asarray(values, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) == 0:
        raise DegenerateDataError("box_stats needs at least one finite value")
    q1, med, q3 = (float(q) for q in np.percentile(x, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = x[(x < lo_fence) | (x > hi_fence)]
    return BoxStats(
        median=med, q1=q1, q3=q3, iqr=iqr,
        whisker_lo=float(inside.min()),
        whisker_hi=float(inside.max()),
        outliers=tuple(sorted(float(v) for v in outliers)),
        n=len(x),
    )


def mean_diff_ci(group_a, group_b, alpha: float = 0.05, pooled: bool = False,
                 variable: str = "", group: str = "",
                 n_dropped: int = 0) -> MeanDiffResult:
    """Confidence interval for mean(group_a) - mean(group_b).

    Welch's unequal-variance interval by default (Welch-Satterthwaite
    degrees of freedom); ``pooled=True`` uses the pooled-variance form.
    Significant means the interval excludes zero.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise AnalysisError(
            f"both groups need at least 2 values (got {len(a)} and {len(b)})"
        )
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise AnalysisError("groups must be finite (drop missing values first)")
    n_a, n_b = len(a), len(b)
    mean_a, mean_b = float(a.mean()), float(b.mean())
    diff = mean_a - mean_b
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    if pooled:
        sp2 = ((n_a - 1) * var_a + (n_b - 1) * var_b) / (n_a + n_b - 2)
        se = math.sqrt(sp2 * (1.0 / n_a + 1.0 / n_b))
        dof = float(n_a + n_b - 2)
    else:
        se = math.sqrt(var_a / n_a + var_b / n_b)
        denom = ((var_a / n_a) ** 2 / (n_a - 1)
                 + (var_b / n_b) ** 2 / (n_b - 1))
        if se > 0 and denom > 0:  # denom can underflow for tiny variances
            dof = (var_a / n_a + var_b / n_b) ** 2 / denom
        else:
            dof = float(n_a + n_b - 2)  # (near-)constant groups
    if se > 0:
        half = float(stats.t.ppf(1.0 - alpha / 2.0, dof)) * se
    else:
        half = 0.0
    ci_lo, ci_hi = diff - half, diff + half
    return MeanDiffResult(
        variable=variable, group=group,
        mean_a=mean_a, mean_b=mean_b, diff=diff,
        ci_lo=ci_lo, ci_hi=ci_hi,
        significant=bool(ci_lo > 0 or ci_hi < 0),
        n_a=n_a, n_b=n_b, n_dropped=n_dropped,
    )


def battery_column_order(names) -> list[str]:
    """Sort variable names by conceptual group, then schema position (extras last, alphabetical)."""
    def key(name: str):
        grp = column_group(name)
        return (_GROUP_RANK[grp], _SYMBOL_RANK.get(name, math.inf), name)
    return sorted(names, key=key)


def stage_ttest_battery(table: VariablesTable, cut: float,
                        alpha: float = 0.05, pooled: bool = False,
                        split_first: bool = False,
                        columns: list[str] | None = None) -> TTestBattery:
    """Mean-difference CI per variable between the two temporal stages.

    Rows split on DFW <= cut (first stage) versus DFW > cut.  Each column
    is standardized to [0, 1] over all rows before splitting (or per group
    when ``split_first``), rows missing that column are dropped with a
    count, and columns leaving fewer than 2 values in either group are
    reported untestable rather than failing the battery.
    """
    if "DFW" not in table.columns:
        raise AnalysisError("battery requires the DFW column")
    dfw = table.column("DFW")
    dfw_known = np.isfinite(dfw)
    n_missing_dfw = int((~dfw_known).sum())
    in_a = dfw_known & (dfw <= cut)
    in_b = dfw_known & (dfw > cut)

    if columns is None:
        columns = [name for name in table.column_order if name != "DFW"]
    ordered = battery_column_order(columns)

    results: list[MeanDiffResult] = []
    untestable: list[UntestableColumn] = []
    for name in ordered:
        col = table.column(name)
        known = np.isfinite(col)
        n_dropped = int((dfw_known & ~known).sum())
        mask_a = in_a & known
        mask_b = in_b & known
        n_a, n_b = int(mask_a.sum()), int(mask_b.sum())
        grp = column_group(name)
        if n_a < 2 or n_b < 2:
            untestable.append(UntestableColumn(
                name, grp, n_a, n_b,
                f"fewer than 2 values in a group (n_a={n_a}, n_b={n_b})"))
            continue
        try:
            if split_first:
                a = min_max_standardize(col[mask_a])
                b = min_max_standardize(col[mask_b])
            else:
                std = min_max_standardize(col)
                a, b = std[mask_a], std[mask_b]
        except DegenerateDataError as exc:
            untestable.append(UntestableColumn(name, grp, n_a, n_b, str(exc)))
            continue
        results.append(mean_diff_ci(a, b, alpha=alpha, pooled=pooled,
                                    variable=name, group=grp,
                                    n_dropped=n_dropped))
    return TTestBattery(
        results=tuple(results),
        untestable=tuple(untestable),
        cut=float(cut),
        n_missing_dfw=n_missing_dfw,
        variance="pooled" if pooled else "welch",
        standardization=("split-then-standardize" if split_first
                         else "standardize-then-split"),
    )


def quadrant_classify(t: float, k: float, t_cut: float = 44.0,
                      k_cut: float = 15.0) -> Quadrant:
    """Place a (t, k) point into Q1..Q4; comparisons are inclusive on <=."""
    if t <= t_cut:
        label = "Q4" if k > k_cut else "Q1"
    else:
        label = "Q3" if k > k_cut else "Q2"
    return Quadrant(label=label, t_cut=float(t_cut), k_cut=float(k_cut))
