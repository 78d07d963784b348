"""End-to-end analysis runs: stage sequencing, artifact emission, reporting.

A run ingests the three input files, computes the metric columns, estimates
the arrival-day density and its two-stage cut, assigns stages, fits the
mean-degree decay and the arrival-vs-network-distance trend, runs the
mean-difference battery, and emits charts and choropleths.  Identical
inputs and configuration produce byte-identical CSV/JSON artifacts; any
stage failure aborts the run, names the stage, and removes partial outputs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, centrality, charts, geo
from .curvefit import ERROR_MODEL_NOTE, EXP1, best_fit, fit, group_mean
from .errors import EmissionError, IngestionError, NetspreadError
from .inference import (
    QUANTILE_RULE,
    box_stats,
    stage_ttest_battery,
)
from .kde import find_stage_cut, kde_estimate
from .model import (
    FlowNetwork,
    VariablesTable,
    format_number,
    parse_edge_list,
    parse_nodes,
    parse_variables,
)

CONTINENT_ORDER = ("Asia", "Europe", "NorthAmerica", "SouthAmerica",
                   "Africa", "Oceania")

ALL_STAGES = ("metrics", "kde", "stages", "fits", "battery", "charts", "map")


@dataclass
class RunConfig:
    """Effective configuration of one pipeline run (defaults included)."""

    nodes_path: Path
    edges_path: Path
    variables_path: Path
    out_dir: Path
    reference: str = "CHN"
    directed: bool = False
    cut_override: float | None = None
    t_cut: float = 44.0
    k_cut: float = 15.0
    alpha: float = 0.05
    pooled: bool = False
    split_first: bool = False
    kde_points: int = 100
    bandwidth: float | None = None
    fit_raw: bool = False
    emit: tuple[str, ...] = ALL_STAGES

    def __post_init__(self):
        self.nodes_path = Path(self.nodes_path)
        self.edges_path = Path(self.edges_path)
        self.variables_path = Path(self.variables_path)
        self.out_dir = Path(self.out_dir)
        unknown = set(self.emit) - set(ALL_STAGES)
        if unknown:
            raise IngestionError(f"unknown stages in emit: {sorted(unknown)}")
        self.emit = tuple(s for s in ALL_STAGES if s in self.emit)

    def enabled(self, stage: str) -> bool:
        return stage in self.emit

    def validate(self) -> None:
        """Check stage prerequisites before anything runs."""
        need = []
        if self.enabled("stages") and self.cut_override is None and not self.enabled("kde"):
            need.append("stages requires kde (for the detected cut) or --cut-at")
        if self.enabled("battery") and self.cut_override is None and not self.enabled("kde"):
            need.append("battery requires kde (for the detected cut) or --cut-at")
        if self.enabled("fits") and not self.enabled("metrics"):
            need.append("fits requires metrics")
        if self.enabled("battery") and not self.enabled("metrics"):
            need.append("battery requires metrics")
        if self.enabled("charts") and not (self.enabled("metrics")
                                           and self.enabled("fits")
                                           and self.enabled("battery")):
            need.append("charts requires metrics, fits and battery")
        if self.enabled("map") and not self.enabled("stages"):
            need.append("map requires stages")
        if need:
            raise IngestionError("configuration error: " + "; ".join(need))

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


@dataclass(frozen=True)
class StageAssignment:
    """Temporal stage per node: First iff the arrival day is <= the cut."""

    stages: dict[int, str]
    cut_used: float
    missing: tuple[str, ...]

    def counts(self) -> dict[str, int]:
        first = sum(1 for s in self.stages.values() if s == "First")
        return {"First": first, "Second": len(self.stages) - first}


def assign_stages(table: VariablesTable, cut: float) -> StageAssignment:
    """Split nodes on arrival day <= cut; rows missing DFW are reported."""
    dfw = table.column("DFW")
    stages: dict[int, str] = {}
    missing: list[str] = []
    for i, code in enumerate(table.codes):
        if np.isfinite(dfw[i]):
            stages[i] = "First" if dfw[i] <= cut else "Second"
        else:
            missing.append(code)
    return StageAssignment(stages=stages, cut_used=float(cut),
                           missing=tuple(missing))


class _Emitter:
    """Tracks written artifacts so a failed run can clean up after itself."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.written.append(p)
        return p

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)

    def manifest(self) -> list[dict]:
        entries = []
        for p in sorted(self.written, key=lambda q: q.name):
            data = p.read_bytes()
            entries.append({
                "name": p.name,
                "sha256": hashlib.sha256(data).hexdigest(),
                "bytes": len(data),
            })
        return entries


def _csv_text(header: list[str], rows: list[list]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def battery_csv(battery) -> str:
    """battery.csv body: tested rows first, untestable rows with empty stats."""
    rows = []
    for r in battery.results:
        rows.append([r.variable, r.group, r.n_a, r.n_b,
                     format_number(r.diff), format_number(r.ci_lo),
                     format_number(r.ci_hi),
                     "true" if r.significant else "false"])
    for u in battery.untestable:
        rows.append([u.variable, u.group, u.n_a, u.n_b, "", "", "", ""])
    return _csv_text(
        ["variable", "group", "n_a", "n_b", "diff", "ci_lo", "ci_hi",
         "significant"], rows)


def _stage(name: str):
    """Decorate stage bodies so failures carry the stage name."""
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except NetspreadError as exc:
                raise type(exc)(f"stage {name}: {exc}") from exc
        return inner
    return wrap


def load_inputs(config: RunConfig) -> tuple[FlowNetwork, VariablesTable]:
    """Parse and validate the three input files."""
    for p in (config.nodes_path, config.edges_path, config.variables_path):
        if not p.is_file():
            raise IngestionError(f"input file not found: {p}")
    nodes = parse_nodes(config.nodes_path.read_text(encoding="utf-8"))
    net = parse_edge_list(config.edges_path.read_text(encoding="utf-8"), nodes)
    table = parse_variables(config.variables_path.read_text(encoding="utf-8"), net)
    return net, table


def metrics_table(net: FlowNetwork, table: VariablesTable,
                  reference: str | None, directed: bool) -> VariablesTable:
    """Append every centrality column to the variables table."""
    vectors = centrality.compute_all(net, reference=reference, directed=directed)
    return table.with_columns(
        {name: np.array(vec.as_list(net.n)) for name, vec in vectors.items()})


def metrics_csv(merged: VariablesTable, metric_names: list[str]) -> str:
    rows = [[code, *(format_number(merged.columns[m][i]) for m in metric_names)]
            for i, code in enumerate(merged.codes)]
    return _csv_text(["code", *metric_names], rows)


@_stage("fits")
def _run_fits(config: RunConfig, merged: VariablesTable, emitter: _Emitter) -> dict:
    dfw = merged.column("DFW")
    deg = merged.column("DEG")
    keep = np.isfinite(dfw) & np.isfinite(deg)
    if config.fit_raw:
        mean_fit = fit(EXP1, dfw[keep], deg[keep])
        series = {"mode": "raw", "n": int(keep.sum())}
    else:
        days, means = group_mean(dfw[keep], deg[keep])
        mean_fit = fit(EXP1, days, means)
        series = {"mode": "group-mean", "n": len(days)}
    emitter.write_json("fit_mean_degree.json",
                       {"series": series, "fit": mean_fit.as_dict(),
                        "error_model": ERROR_MODEL_NOTE})

    eccfc = merged.column("ECCFC")
    keep2 = np.isfinite(dfw) & np.isfinite(eccfc)
    groups = np.unique(eccfc[keep2])
    medians = np.array([float(np.percentile(dfw[keep2][eccfc[keep2] == g], 50))
                        for g in groups])
    ranking = best_fit(groups, medians)
    emitter.write_json("fit_eccfc_medians.json", {
        "series": {"groups": [float(g) for g in groups],
                   "median_dfw": [float(v) for v in medians],
                   "quantile_rule": QUANTILE_RULE},
        "ranked": [r.as_dict() for r in ranking.results],
        "skipped": [{"family": tag, "reason": reason}
                    for tag, reason in ranking.skipped],
        "error_model": ERROR_MODEL_NOTE,
    })
    return {
        "mean_degree": mean_fit.as_dict(),
        "eccfc_best": ranking.best.as_dict(),
        "eccfc_skipped": len(ranking.skipped),
    }


@_stage("charts")
def _run_charts(config: RunConfig, net: FlowNetwork, merged: VariablesTable,
                mean_fit, battery, emitter: _Emitter) -> dict:
    dfw = merged.column("DFW")
    deg = merged.column("DEG")
    keep = np.isfinite(dfw) & np.isfinite(deg)

    x_boxes = []
    for continent in CONTINENT_ORDER:
        sel = keep & np.array([node.continent == continent for node in net.nodes])
        if sel.sum() > 0:
            x_boxes.append((continent, box_stats(dfw[sel])))
    y_boxes = [("DEG", box_stats(deg[keep]))]
    days, means = group_mean(dfw[keep], deg[keep])

    scatter_meta = charts.scatter_with_layers(
        dfw[keep], deg[keep], emitter.path("scatter_dfw_degree.svg"),
        x_label="days to first infection (DFW)", y_label="node degree",
        title="Degree vs arrival day",
        x_boxes=x_boxes, y_boxes=y_boxes,
        group_means=(days, means),
        fit=mean_fit, cut_lines=(config.t_cut, config.k_cut))
    scatter_meta["path"] = "scatter_dfw_degree.svg"

    if battery.results:
        bar_meta = charts.errorbar_chart(
            list(battery.results), emitter.path("errorbars_battery.svg"),
            title=f"95% CI of standardized mean differences "
                  f"(first vs second stage, cut {format_number(battery.cut)})")
        bar_meta["path"] = "errorbars_battery.svg"
    else:
        bar_meta = {"skipped": "battery has no testable columns"}
    return {"scatter": scatter_meta, "errorbars": bar_meta}


def run_pipeline(config: RunConfig) -> dict:
    """Execute the configured stages and return the run report.

    The report echoes the full effective configuration and lists every
    emitted artifact with a content digest.  On failure nothing is left
    behind: partial outputs are removed and the error names the stage.
    """
    config.validate()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    emitter = _Emitter(config.out_dir)
    report: dict = {
        "generator": f"netspread {__version__}",
        "config": config.echo(),
    }
    try:
        net, table = _stage("ingest")(load_inputs)(config)
        report["network"] = {"n": net.n, "m": net.m,
                             "variables_missing_rows": list(table.missing_codes)}

        merged = table
        if config.enabled("metrics"):
            merged = _stage("metrics")(metrics_table)(
                net, table, config.reference, config.directed)
            metric_names = [c for c in merged.column_order
                            if c not in table.column_order]
            emitter.write_text("metrics.csv",
                               metrics_csv(merged, metric_names))
            zeroed = centrality.low_degree_nodes(net, config.directed)
            report["metrics"] = {
                "columns": metric_names,
                "clustering_zeroed_nodes": [net.nodes[i].code for i in zeroed],
            }

        cut_value = config.cut_override
        if config.enabled("kde"):
            dfw = merged.column("DFW")
            samples = dfw[np.isfinite(dfw)]
            curve = _stage("kde")(kde_estimate)(
                samples, h=config.bandwidth, points=config.kde_points)
            emitter.write_text("density.csv", _csv_text(
                ["grid_x", "density"],
                [[format_number(x), format_number(d)]
                 for x, d in zip(curve.grid, curve.density)]))
            report["kde"] = {"bandwidth": curve.bandwidth, "n": curve.n,
                             "points": config.kde_points,
                             "sample_range": [float(samples.min()),
                                              float(samples.max())],
                             "grid_range": [float(curve.grid[0]),
                                            float(curve.grid[-1])]}
            if config.cut_override is None:
                stage_cut = _stage("kde")(find_stage_cut)(curve)
                cut_value = stage_cut.cut
                cut_info = {**stage_cut.as_dict(), "override": False}
            else:
                cut_info = {"cut": float(config.cut_override), "override": True}
            emitter.write_text("stage_cut.json",
                               json.dumps(cut_info, sort_keys=True) + "\n")
            report["kde"]["cut"] = cut_info

        assignment = None
        if config.enabled("stages"):
            assignment = _stage("stages")(assign_stages)(merged, cut_value)
            emitter.write_text("stages.csv", _csv_text(
                ["code", "stage"],
                [[code, assignment.stages.get(i, "")]
                 for i, code in enumerate(merged.codes)]))
            report["stages"] = {"cut_used": assignment.cut_used,
                                **assignment.counts(),
                                "missing_dfw": list(assignment.missing)}

        if config.enabled("fits"):
            report["fits"] = _run_fits(config, merged, emitter)

        battery = None
        if config.enabled("battery"):
            battery = _stage("battery")(stage_ttest_battery)(
                merged, cut_value, alpha=config.alpha, pooled=config.pooled,
                split_first=config.split_first)
            emitter.write_text("battery.csv", battery_csv(battery))
            report["battery"] = {
                "cut": battery.cut,
                "variance": battery.variance,
                "standardization": battery.standardization,
                "quantile_rule": QUANTILE_RULE,
                "tested": len(battery.results),
                "untestable": [u.variable for u in battery.untestable],
                "significant": [r.variable for r in battery.results
                                if r.significant],
                "missing_dfw_rows": battery.n_missing_dfw,
            }

        if config.enabled("charts"):
            report["charts"] = _run_charts(config, net, merged,
                                           _mean_degree_fit(config, merged),
                                           battery, emitter)

        if config.enabled("map"):
            dfw = merged.column("DFW")
            dfw_values = {i: float(dfw[i]) for i in range(net.n)
                          if np.isfinite(dfw[i])}
            emit = _stage("map")(geo.emit_choropleth)
            map_meta = emit(net, dfw_values, emitter.path("map_dfw.geojson"),
                            emitter.path("map_dfw.svg"),
                            palette="continuous", value_name="DFW")
            stage_meta = emit(net, dict(assignment.stages),
                              emitter.path("map_stages.geojson"),
                              emitter.path("map_stages.svg"),
                              palette="binary", value_name="stage")
            report["map"] = {"dfw_palette": map_meta,
                             "stage_palette": stage_meta}

        report["artifacts"] = emitter.manifest()
        emitter.write_json("report.json", report)
        return report
    except Exception:
        emitter.rollback()
        raise


def _mean_degree_fit(config: RunConfig, merged: VariablesTable):
    """Refit the mean-degree decay for the chart overlay (cheap, deterministic)."""
    dfw = merged.column("DFW")
    deg = merged.column("DEG")
    keep = np.isfinite(dfw) & np.isfinite(deg)
    if config.fit_raw:
        return fit(EXP1, dfw[keep], deg[keep])
    days, means = group_mean(dfw[keep], deg[keep])
    return fit(EXP1, days, means)


def report_for_dir(out_dir: str | Path) -> dict:
    """Recompute the artifact manifest of a finished run directory."""
    out = Path(out_dir)
    if not out.is_dir():
        raise IngestionError(f"not a directory: {out}")
    report_path = out / "report.json"
    if not report_path.is_file():
        raise IngestionError(f"no report.json in {out}")
    report = json.loads(report_path.read_text(encoding="utf-8"))
    entries = []
    for item in report.get("artifacts", []):
        p = out / item["name"]
        if not p.is_file():
            raise EmissionError(f"artifact missing: {p}")
        data = p.read_bytes()
        entries.append({"name": item["name"],
                        "sha256": hashlib.sha256(data).hexdigest(),
                        "bytes": len(data)})
    report["artifacts"] = entries
    return report
