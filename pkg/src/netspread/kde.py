"""Fixed-bandwidth normal-kernel density estimation and stage-cut detection.

The estimate at x is (1/(n*h)) * sum_i K((x - x_i)/h) with the standard
normal kernel K(u) = exp(-u^2/2)/sqrt(2*pi), evaluated on an equally
spaced grid (100 points by default) extended 4h beyond the sample range
so the curve integrates to ~1 and is testable against quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, StageCutError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class DensityCurve:
    """KDE evaluation grid with per-point density estimates."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    n: int

    def __post_init__(self):
        self.grid.setflags(write=False)
        self.density.setflags(write=False)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])


@dataclass(frozen=True)
class StageCut:
    """Density valley separating the two dominant modes of a curve."""

    cut: float
    resolution: float  # grid spacing; the cut is only exact to this
    lower_mode: float
    upper_mode: float

    def as_dict(self) -> dict:
        return {
            "cut": self.cut,
            "resolution": self.resolution,
            "lower_mode": self.lower_mode,
            "upper_mode": self.upper_mode,
        }


def silverman_bandwidth(samples) -> float:
    """Rule-of-thumb bandwidth h = 0.9 * min(sd, IQR/1.34) * n^(-1/5).

    Falls back to the standard deviation when the IQR is zero (heavily
    tied data); a sample with no spread at all is an error.
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise DegenerateDataError("bandwidth rule needs at least 2 samples")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    if not scale > 0:
        raise DegenerateDataError("constant sample has zero bandwidth")
    return 0.9 * scale * len(x) ** (-0.2)


def gaussian_kernel_density(samples, h: float, at) -> np.ndarray:
    """Direct normal-kernel density estimate at the given evaluation points."""
    x = np.asarray(samples, dtype=float)
    pts = np.atleast_1d(np.asarray(at, dtype=float))
    if len(x) == 0:
        raise DegenerateDataError("empty sample")
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    u = (pts[:, None] - x[None, :]) / h
    return np.exp(-0.5 * u * u).sum(axis=1) / (len(x) * h * _SQRT_2PI)


def kde_estimate(samples, h: float | None = None, points: int = 100) -> DensityCurve:
    """Estimate the density curve of a sample on an equally spaced grid.

    The grid spans [min - 4h, max + 4h].  When h is omitted it defaults to
    the Silverman rule (which requires n >= 2 and nonzero spread).
    """
    x = np.asarray(samples, dtype=float)
    if len(x) == 0:
        raise DegenerateDataError("empty sample")
    if not np.isfinite(x).all():
        raise DegenerateDataError("sample contains non-finite values")
    if points < 2:
        raise ValueError("grid needs at least 2 points")
    if h is None:
        h = silverman_bandwidth(x)
    elif not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    grid = np.linspace(x.min() - 4.0 * h, x.max() + 4.0 * h, points)
    density = gaussian_kernel_density(x, h, grid)
    return DensityCurve(grid=grid, density=density, bandwidth=float(h), n=len(x))


def _smooth3(values: np.ndarray) -> np.ndarray:
    """Light 3-point smoothing (1/4, 1/2, 1/4), end values replicated."""
    padded = np.concatenate([values[:1], values, values[-1:]])
    return 0.25 * padded[:-2] + 0.5 * padded[1:-1] + 0.25 * padded[2:]


def _peak_prominences(values: np.ndarray, peaks: list[int]) -> list[float]:
    """Topographic prominence: height above the higher of the two bases.

    A peak's base on each side is the minimum between the peak and the
    nearest strictly higher point (or the array end).
    """
    proms = []
    for p in peaks:
        left_min = values[p]
        i = p - 1
        while i >= 0 and values[i] <= values[p]:
            left_min = min(left_min, values[i])
            i -= 1
        if i < 0:
            left_min = values[: p + 1].min()
        right_min = values[p]
        i = p + 1
        while i < len(values) and values[i] <= values[p]:
            right_min = min(right_min, values[i])
            i += 1
        if i >= len(values):
            right_min = values[p:].min()
        proms.append(float(values[p] - max(left_min, right_min)))
    return proms


def find_stage_cut(curve: DensityCurve, min_prominence: float = 0.1) -> StageCut:
    """Locate the density valley between the two dominant modes.

    Modes are interior local maxima of the lightly smoothed curve whose
    prominence reaches ``min_prominence`` of the global maximum, which
    keeps sampling ripples in the tails from masquerading as structure.
    Fewer than two such modes means no two-stage split exists.  The cut is
    the grid point of minimum density strictly between the two highest
    modes (ties resolve toward the lower x) and is only exact to the grid
    spacing, reported as ``resolution``.
    """
    smooth = _smooth3(curve.density)
    peaks = [
        i for i in range(1, len(smooth) - 1)
        if smooth[i] > smooth[i - 1] and smooth[i] >= smooth[i + 1]
    ]
    threshold = min_prominence * float(smooth.max())
    proms = _peak_prominences(smooth, peaks)
    modes = [p for p, prom in zip(peaks, proms) if prom >= threshold]
    if len(modes) < 2:
        raise StageCutError(
            f"no two-stage structure detected: {len(modes)} prominent mode(s)"
        )
    top_two = sorted(sorted(modes, key=lambda p: -smooth[p])[:2])
    lo, hi = top_two
    between = curve.density[lo + 1: hi]
    if len(between) == 0:
        raise StageCutError("the two dominant modes are adjacent grid points")
    j = lo + 1 + int(np.argmin(between))
    return StageCut(
        cut=float(curve.grid[j]),
        resolution=curve.spacing,
        lower_mode=float(curve.grid[lo]),
        upper_mode=float(curve.grid[hi]),
    )


def mass_between(curve: DensityCurve, a: float, b: float) -> float:
    """Trapezoidal probability mass of the curve over [a, b], clamped to [0, 1]."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    lo = max(a, float(curve.grid[0]))
    hi = min(b, float(curve.grid[-1]))
    if lo >= hi:
        return 0.0
    inside = curve.grid[(curve.grid > lo) & (curve.grid < hi)]
    xs = np.concatenate([[lo], inside, [hi]])
    ys = np.interp(xs, curve.grid, curve.density)
    return float(min(max(np.trapezoid(ys, xs), 0.0), 1.0))
