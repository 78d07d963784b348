"""Deterministic SVG chart emission: layered scatterplots and CI error bars.

Charts are written from scratch (no plotting toolkit) so identical inputs
produce identical bytes apart from the generator-version comment.  Pixel
coordinates are formatted to two decimals.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .curvefit import FitResult, predict
from .errors import EmissionError
from .inference import QUANTILE_RULE, BoxStats, MeanDiffResult

FIT_CURVE_SAMPLES = 200
_POINT_COLOR = "#3465a4"
_CURVE_COLOR = "#cc0000"
_MEAN_COLOR = "#cc0000"
_BOX_COLOR = "#555555"
_CUT_COLOR = "#888888"


def _px(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** np.floor(np.log10(raw))
    step = next(m * mag for m in (1.0, 2.0, 5.0, 10.0) if raw <= m * mag)
    first = np.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else float(t))
        t += step
    return ticks


def _pad_range(lo: float, hi: float, frac: float = 0.05) -> tuple[float, float]:
    if hi <= lo:
        return lo - 1.0, hi + 1.0
    pad = (hi - lo) * frac
    return lo - pad, hi + pad


class _Panel:
    """Pixel transform for one data panel inside the SVG."""

    def __init__(self, left: float, top: float, width: float, height: float,
                 x_range: tuple[float, float], y_range: tuple[float, float]):
        self.left, self.top = left, top
        self.width, self.height = width, height
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range

    def x(self, v: float) -> float:
        return self.left + (v - self.x_lo) / (self.x_hi - self.x_lo) * self.width

    def y(self, v: float) -> float:
        return self.top + self.height - (v - self.y_lo) / (self.y_hi - self.y_lo) * self.height

    def metadata(self) -> dict:
        return {
            "plot": [self.left, self.top, self.width, self.height],
            "x_range": [self.x_lo, self.x_hi],
            "y_range": [self.y_lo, self.y_hi],
        }


def _svg_document(width: float, height: float, body: list[str]) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
        f"<!-- generator: netspread {__version__} -->",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _axes(panel: _Panel, x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<rect x="{_px(panel.left)}" y="{_px(panel.top)}" '
        f'width="{_px(panel.width)}" height="{_px(panel.height)}" '
        'fill="none" stroke="#000000"/>'
    ]
    base = panel.top + panel.height
    for t in _nice_ticks(panel.x_lo, panel.x_hi):
        if not panel.x_lo <= t <= panel.x_hi:
            continue
        x = panel.x(t)
        parts.append(f'<line x1="{_px(x)}" y1="{_px(base)}" x2="{_px(x)}" '
                     f'y2="{_px(base + 4)}" stroke="#000000"/>')
        parts.append(f'<text x="{_px(x)}" y="{_px(base + 16)}" font-size="10" '
                     f'text-anchor="middle">{_tick_label(t)}</text>')
    for t in _nice_ticks(panel.y_lo, panel.y_hi):
        if not panel.y_lo <= t <= panel.y_hi:
            continue
        y = panel.y(t)
        parts.append(f'<line x1="{_px(panel.left - 4)}" y1="{_px(y)}" '
                     f'x2="{_px(panel.left)}" y2="{_px(y)}" stroke="#000000"/>')
        parts.append(f'<text x="{_px(panel.left - 7)}" y="{_px(y + 3)}" '
                     f'font-size="10" text-anchor="end">{_tick_label(t)}</text>')
    mid_x = panel.left + panel.width / 2
    parts.append(f'<text x="{_px(mid_x)}" y="{_px(base + 32)}" font-size="12" '
                 f'text-anchor="middle">{escape(x_label)}</text>')
    mid_y = panel.top + panel.height / 2
    parts.append(f'<text x="14" y="{_px(mid_y)}" font-size="12" '
                 f'text-anchor="middle" '
                 f'transform="rotate(-90 14 {_px(mid_y)})">{escape(y_label)}</text>')
    return parts


def _hbox_glyph(panel: _Panel, box: BoxStats, y_mid: float, half: float) -> list[str]:
    """Horizontal boxplot glyph: values map through the panel's x transform."""
    x1, xm, x3 = panel.x(box.q1), panel.x(box.median), panel.x(box.q3)
    wl, wh = panel.x(box.whisker_lo), panel.x(box.whisker_hi)
    s = f'stroke="{_BOX_COLOR}"'
    parts = [
        f'<line x1="{_px(wl)}" y1="{_px(y_mid)}" x2="{_px(x1)}" y2="{_px(y_mid)}" {s}/>',
        f'<line x1="{_px(x3)}" y1="{_px(y_mid)}" x2="{_px(wh)}" y2="{_px(y_mid)}" {s}/>',
        f'<line x1="{_px(wl)}" y1="{_px(y_mid - half)}" x2="{_px(wl)}" y2="{_px(y_mid + half)}" {s}/>',
        f'<line x1="{_px(wh)}" y1="{_px(y_mid - half)}" x2="{_px(wh)}" y2="{_px(y_mid + half)}" {s}/>',
        f'<rect x="{_px(x1)}" y="{_px(y_mid - half)}" width="{_px(x3 - x1)}" '
        f'height="{_px(2 * half)}" fill="#eeeeee" stroke="{_BOX_COLOR}"/>',
        f'<line x1="{_px(xm)}" y1="{_px(y_mid - half)}" x2="{_px(xm)}" y2="{_px(y_mid + half)}" '
        f'stroke="#000000"/>',
    ]
    for v in box.outliers:
        parts.append(f'<circle cx="{_px(panel.x(v))}" cy="{_px(y_mid)}" r="2" '
                     f'fill="none" stroke="{_BOX_COLOR}"/>')
    return parts


def _vbox_glyph(panel: _Panel, box: BoxStats, x_mid: float, half: float) -> list[str]:
    y1, ym, y3 = panel.y(box.q1), panel.y(box.median), panel.y(box.q3)
    wl, wh = panel.y(box.whisker_lo), panel.y(box.whisker_hi)
    s = f'stroke="{_BOX_COLOR}"'
    parts = [
        f'<line x1="{_px(x_mid)}" y1="{_px(wl)}" x2="{_px(x_mid)}" y2="{_px(y1)}" {s}/>',
        f'<line x1="{_px(x_mid)}" y1="{_px(y3)}" x2="{_px(x_mid)}" y2="{_px(wh)}" {s}/>',
        f'<line x1="{_px(x_mid - half)}" y1="{_px(wl)}" x2="{_px(x_mid + half)}" y2="{_px(wl)}" {s}/>',
        f'<line x1="{_px(x_mid - half)}" y1="{_px(wh)}" x2="{_px(x_mid + half)}" y2="{_px(wh)}" {s}/>',
        f'<rect x="{_px(x_mid - half)}" y="{_px(y3)}" width="{_px(2 * half)}" '
        f'height="{_px(y1 - y3)}" fill="#eeeeee" stroke="{_BOX_COLOR}"/>',
        f'<line x1="{_px(x_mid - half)}" y1="{_px(ym)}" x2="{_px(x_mid + half)}" y2="{_px(ym)}" '
        f'stroke="#000000"/>',
    ]
    for v in box.outliers:
        parts.append(f'<circle cx="{_px(x_mid)}" cy="{_px(panel.y(v))}" r="2" '
                     f'fill="none" stroke="{_BOX_COLOR}"/>')
    return parts


def scatter_with_layers(
    x, y, out_path: str | Path, *,
    x_label: str = "x", y_label: str = "y", title: str = "",
    x_boxes: list[tuple[str, BoxStats]] | None = None,
    y_boxes: list[tuple[str, BoxStats]] | None = None,
    group_means: tuple[np.ndarray, np.ndarray] | None = None,
    fit: FitResult | None = None,
    cut_lines: tuple[float, float] | None = None,
    width: float = 760.0, height: float = 560.0,
) -> dict:
    """Scatterplot with optional axis boxplots, '+' group means, a fitted
    curve sampled at 200 points, and dashed cut lines.  Returns geometry
    metadata (plot rectangle and data ranges) for downstream checks."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[keep], ys[keep]

    strip_row = 18.0
    top_strip = (len(x_boxes) * strip_row + 8 if x_boxes else 0.0)
    right_strip = (len(y_boxes) * strip_row + 8 if y_boxes else 0.0)
    left, bottom, top_pad, right_pad = 64.0, 54.0, 28.0, 16.0
    panel = _Panel(
        left, top_pad + top_strip,
        width - left - right_pad - right_strip,
        height - top_pad - top_strip - bottom,
        _pad_range(float(xs.min()), float(xs.max())),
        _pad_range(float(ys.min()), float(ys.max())),
    )

    body: list[str] = []
    if x_boxes or y_boxes:
        body.append(f"<!-- quantiles: {QUANTILE_RULE} -->")
    if title:
        body.append(f'<text x="{_px(width / 2)}" y="18" font-size="13" '
                    f'text-anchor="middle">{escape(title)}</text>')
    body.append(f'<clipPath id="plot"><rect x="{_px(panel.left)}" '
                f'y="{_px(panel.top)}" width="{_px(panel.width)}" '
                f'height="{_px(panel.height)}"/></clipPath>')
    body.extend(_axes(panel, x_label, y_label))

    if cut_lines is not None:
        x_cut, y_cut = cut_lines
        if panel.x_lo <= x_cut <= panel.x_hi:
            px = panel.x(x_cut)
            body.append(f'<line x1="{_px(px)}" y1="{_px(panel.top)}" x2="{_px(px)}" '
                        f'y2="{_px(panel.top + panel.height)}" stroke="{_CUT_COLOR}" '
                        'stroke-dasharray="5,4"/>')
        if panel.y_lo <= y_cut <= panel.y_hi:
            py = panel.y(y_cut)
            body.append(f'<line x1="{_px(panel.left)}" y1="{_px(py)}" '
                        f'x2="{_px(panel.left + panel.width)}" y2="{_px(py)}" '
                        f'stroke="{_CUT_COLOR}" stroke-dasharray="5,4"/>')

    if fit is not None:
        sample_lo, sample_hi = float(xs.min()), float(xs.max())
        if fit.family.positive_x:
            sample_lo = max(sample_lo, 1e-9)
        sample_x = np.linspace(sample_lo, sample_hi, FIT_CURVE_SAMPLES)
        sample_y = predict(fit, sample_x)
        pts = " ".join(f"{_px(panel.x(a))},{_px(panel.y(b))}"
                       for a, b in zip(sample_x, sample_y))
        body.append(f'<polyline points="{pts}" fill="none" '
                    f'stroke="{_CURVE_COLOR}" stroke-width="1.5" '
                    'clip-path="url(#plot)"/>')

    for a, b in zip(xs, ys):
        body.append(f'<circle cx="{_px(panel.x(a))}" cy="{_px(panel.y(b))}" '
                    f'r="3" fill="{_POINT_COLOR}" fill-opacity="0.7"/>')

    if group_means is not None:
        for a, b in zip(*group_means):
            cx, cy = panel.x(float(a)), panel.y(float(b))
            body.append(f'<line x1="{_px(cx - 4)}" y1="{_px(cy)}" x2="{_px(cx + 4)}" '
                        f'y2="{_px(cy)}" stroke="{_MEAN_COLOR}" stroke-width="1.5"/>')
            body.append(f'<line x1="{_px(cx)}" y1="{_px(cy - 4)}" x2="{_px(cx)}" '
                        f'y2="{_px(cy + 4)}" stroke="{_MEAN_COLOR}" stroke-width="1.5"/>')

    if x_boxes:
        for i, (label, box) in enumerate(x_boxes):
            y_mid = top_pad + (i + 0.5) * strip_row
            body.extend(_hbox_glyph(panel, box, y_mid, 5.0))
            body.append(f'<text x="{_px(panel.left - 7)}" y="{_px(y_mid + 3)}" '
                        f'font-size="9" text-anchor="end">{escape(label)}</text>')
    if y_boxes:
        for i, (label, box) in enumerate(y_boxes):
            x_mid = panel.left + panel.width + 8 + (i + 0.5) * strip_row
            body.extend(_vbox_glyph(panel, box, x_mid, 5.0))
            body.append(f'<text x="{_px(x_mid)}" y="{_px(panel.top - 4)}" '
                        f'font-size="9" text-anchor="middle">{escape(label)}</text>')

    Path(out_path).write_text(_svg_document(width, height, body), encoding="utf-8")
    return {"path": str(out_path), **panel.metadata()}


def errorbar_chart(results: list[MeanDiffResult], out_path: str | Path, *,
                   title: str = "", width: float = 900.0,
                   height: float = 480.0) -> dict:
    """One CI bar per variable with a point at the mean difference and a
    horizontal zero-line; significant variables get bold labels."""
    if not results:
        raise EmissionError("error-bar chart needs a non-empty battery")
    lo = min(r.ci_lo for r in results)
    hi = max(r.ci_hi for r in results)
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    left, bottom, top_pad, right_pad = 64.0, 96.0, 28.0, 16.0
    panel = _Panel(left, top_pad, width - left - right_pad,
                   height - top_pad - bottom,
                   (0.0, float(len(results))), _pad_range(lo, hi))

    body: list[str] = []
    if title:
        body.append(f'<text x="{_px(width / 2)}" y="18" font-size="13" '
                    f'text-anchor="middle">{escape(title)}</text>')
    body.extend(_axes(panel, "", "standardized mean difference"))

    zero_y = panel.y(0.0)
    body.append(f'<line x1="{_px(panel.left)}" y1="{_px(zero_y)}" '
                f'x2="{_px(panel.left + panel.width)}" y2="{_px(zero_y)}" '
                'stroke="#000000" stroke-width="1" stroke-dasharray="2,3"/>')

    base = panel.top + panel.height
    for i, r in enumerate(results):
        cx = panel.x(i + 0.5)
        y_lo, y_hi, y_pt = panel.y(r.ci_lo), panel.y(r.ci_hi), panel.y(r.diff)
        body.append(f'<line x1="{_px(cx)}" y1="{_px(y_lo)}" x2="{_px(cx)}" '
                    f'y2="{_px(y_hi)}" stroke="#2e3436" stroke-width="1.5"/>')
        for ybar in (y_lo, y_hi):
            body.append(f'<line x1="{_px(cx - 4)}" y1="{_px(ybar)}" '
                        f'x2="{_px(cx + 4)}" y2="{_px(ybar)}" '
                        'stroke="#2e3436" stroke-width="1.5"/>')
        body.append(f'<circle cx="{_px(cx)}" cy="{_px(y_pt)}" r="3" fill="#cc0000"/>')
        weight = "bold" if r.significant else "normal"
        body.append(f'<text x="{_px(cx)}" y="{_px(base + 10)}" font-size="9" '
                    f'font-weight="{weight}" text-anchor="end" '
                    f'transform="rotate(-55 {_px(cx)} {_px(base + 10)})">'
                    f'{escape(r.variable)}</text>')

    Path(out_path).write_text(_svg_document(width, height, body), encoding="utf-8")
    return {"path": str(out_path), **panel.metadata()}
