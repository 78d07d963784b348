"""Command-line interface: one subcommand per analysis step plus ``run``.

A key=value config file can mirror any flag of the invoked subcommand
(flags given on the command line win).  NETSPREAD_OUT provides the
default output directory.  Exit codes: 0 success, 2 ingestion error,
3 analysis error, 4 emission error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, centrality
from .curvefit import (
    ALL_FAMILIES,
    ERROR_MODEL_NOTE,
    best_fit,
    get_family,
    group_mean,
)
from .errors import (
    AnalysisError,
    EmissionError,
    IngestionError,
    NetspreadError,
)
from .inference import QUANTILE_RULE, stage_ttest_battery
from .kde import find_stage_cut, kde_estimate
from .model import (
    format_number,
    parse_edge_list,
    parse_nodes,
    parse_table,
    parse_variables,
)
from .pipeline import (
    ALL_STAGES,
    RunConfig,
    _csv_text,
    assign_stages,
    battery_csv,
    report_for_dir,
    run_pipeline,
)

_EXIT_INGESTION = 2
_EXIT_ANALYSIS = 3
_EXIT_EMISSION = 4


def _default_out_dir() -> str:
    return os.environ.get("NETSPREAD_OUT", "netspread-out")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netspread",
        description="Flow-network spread analytics: metrics, fits, KDE "
                    "stage detection, two-group inference, charts and maps.")
    parser.add_argument("--version", action="version",
                        version=f"netspread {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="key=value file mirroring this command's flags")

    p = sub.add_parser("ingest", parents=[common],
                       help="parse and validate the input files")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--variables")

    p = sub.add_parser("metrics", parents=[common],
                       help="compute the centrality metric columns")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--variables", help="merge metric columns into this table")
    p.add_argument("--out", required=True)
    p.add_argument("--directed", action="store_true",
                   help="path metrics on the directed view (sensitivity)")
    p.add_argument("--reference", default="CHN",
                   help="node code for the centered-eccentricity columns")

    p = sub.add_parser("fit", parents=[common],
                       help="least-squares fit of the curve families")
    p.add_argument("--data", required=True, help="CSV containing x and y columns")
    p.add_argument("--x", required=True, dest="x_col")
    p.add_argument("--y", required=True, dest="y_col")
    p.add_argument("--families", default=",".join(f.tag for f in ALL_FAMILIES),
                   help="comma-separated family tags (default: all seven)")
    p.add_argument("--group-mean", action="store_true", dest="use_group_mean",
                   help="aggregate y by exact x before fitting")
    p.add_argument("--out", required=True)

    p = sub.add_parser("kde", parents=[common],
                       help="kernel density estimate of one column")
    p.add_argument("--data", required=True)
    p.add_argument("--column", default="DFW")
    p.add_argument("--out", required=True)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--cut", action="store_true",
                   help="also detect the two-stage cut (JSON sidecar)")

    p = sub.add_parser("stages", parents=[common],
                       help="assign each row to the First/Second stage")
    p.add_argument("--data", required=True)
    p.add_argument("--cut", type=float, default=44.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ttest", parents=[common],
                       help="two-group mean-difference battery")
    p.add_argument("--data", required=True)
    p.add_argument("--cut", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pooled", action="store_true",
                   help="pooled-variance intervals instead of Welch")
    p.add_argument("--split-first", action="store_true",
                   help="standardize within each group instead of globally")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", parents=[common],
                       help="recompute the artifact manifest of a run directory")
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("run", parents=[common], help="full pipeline")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--variables", required=True)
    p.add_argument("--out-dir", default=None,
                   help="output directory (default: $NETSPREAD_OUT or ./netspread-out)")
    p.add_argument("--reference", default="CHN")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--cut-at", type=float, default=None,
                   help="skip cut detection and use this day")
    p.add_argument("--t-cut", type=float, default=44.0)
    p.add_argument("--k-cut", type=float, default=15.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--split-first", action="store_true")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--fit-raw", action="store_true",
                   help="fit the degree decay on raw points, not group means")
    p.add_argument("--skip", default="",
                   help=f"comma-separated stages to skip (of: {', '.join(ALL_STAGES)})")
    return parser


def _load_config_tokens(path: str, parser_actions) -> list[str]:
    """Turn a key=value config file into CLI tokens for known flags."""
    known = {}
    for action in parser_actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                known[opt[2:].replace("-", "_")] = (opt, action)
    tokens: list[str] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IngestionError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "config":
            continue
        if key not in known:
            continue  # a shared config file may carry keys for other subcommands
        opt, action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(opt)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise IngestionError(
                    f"{path}:{lineno}: {key} must be a boolean, got {value!r}")
        else:
            tokens.extend([opt, value])
    return tokens


def _find_config(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _read_xy(path: str, x_col: str, y_col: str) -> tuple[np.ndarray, np.ndarray]:
    table = parse_table(Path(path).read_text(encoding="utf-8"))
    for name in (x_col, y_col):
        if name not in table.columns:
            raise IngestionError(f"{path}: no column named {name!r}")
    x = table.column(x_col)
    y = table.column(y_col)
    keep = np.isfinite(x) & np.isfinite(y)
    return x[keep], y[keep]


def _cmd_ingest(args) -> int:
    nodes = parse_nodes(Path(args.nodes).read_text(encoding="utf-8"))
    net = parse_edge_list(Path(args.edges).read_text(encoding="utf-8"), nodes)
    summary = {"n": net.n, "m": net.m}
    if args.variables:
        table = parse_variables(Path(args.variables).read_text(encoding="utf-8"), net)
        summary["variable_columns"] = list(table.column_order)
        summary["missing_rows"] = list(table.missing_codes)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_metrics(args) -> int:
    nodes = parse_nodes(Path(args.nodes).read_text(encoding="utf-8"))
    net = parse_edge_list(Path(args.edges).read_text(encoding="utf-8"), nodes)
    vectors = centrality.compute_all(net, reference=args.reference,
                                     directed=args.directed)
    header = ["code"]
    columns: list[list[str]] = []
    if args.variables:
        table = parse_variables(Path(args.variables).read_text(encoding="utf-8"), net)
        header += list(table.column_order)
        columns += [[format_number(table.columns[c][i]) for i in range(net.n)]
                    for c in table.column_order]
    header += list(vectors)
    columns += [[format_number(v) for v in vec.as_list(net.n)]
                for vec in vectors.values()]
    rows = [[net.nodes[i].code, *(col[i] for col in columns)]
            for i in range(net.n)]
    Path(args.out).write_text(_csv_text(header, rows), encoding="utf-8")
    zeroed = centrality.low_degree_nodes(net, args.directed)
    if zeroed:
        print("note: clustering set to 0 for nodes with degree < 2: "
              + ", ".join(net.nodes[i].code for i in zeroed), file=sys.stderr)
    return 0


def _cmd_fit(args) -> int:
    x, y = _read_xy(args.data, args.x_col, args.y_col)
    if args.use_group_mean:
        x, y = group_mean(x, y)
    try:
        families = tuple(get_family(tag)
                         for tag in args.families.split(",") if tag)
    except ValueError as exc:
        raise IngestionError(str(exc)) from None
    ranking = best_fit(x, y, families)
    payload = {
        "x": args.x_col,
        "y": args.y_col,
        "group_mean": bool(args.use_group_mean),
        "n": int(len(x)),
        "ranked": [r.as_dict() for r in ranking.results],
        "skipped": [{"family": tag, "reason": reason}
                    for tag, reason in ranking.skipped],
        "error_model": ERROR_MODEL_NOTE,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    best = ranking.best
    print(f"best: {best.family.tag} adj_r2={best.adj_r2:.6g}")
    return 0


def _cmd_kde(args) -> int:
    table = parse_table(Path(args.data).read_text(encoding="utf-8"))
    if args.column not in table.columns:
        raise IngestionError(f"{args.data}: no column named {args.column!r}")
    values = table.column(args.column)
    samples = values[np.isfinite(values)]
    curve = kde_estimate(samples, h=args.bandwidth, points=args.points)
    rows = [[format_number(x), format_number(d)]
            for x, d in zip(curve.grid, curve.density)]
    Path(args.out).write_text(_csv_text(["grid_x", "density"], rows),
                              encoding="utf-8")
    if args.cut:
        cut = find_stage_cut(curve)
        sidecar = Path(str(args.out) + ".cut.json")
        sidecar.write_text(json.dumps(cut.as_dict(), sort_keys=True) + "\n",
                           encoding="utf-8")
        print(f"cut at {format_number(cut.cut)} "
              f"(resolution {format_number(cut.resolution)})")
    return 0


def _cmd_stages(args) -> int:
    table = parse_table(Path(args.data).read_text(encoding="utf-8"))
    if "DFW" not in table.columns:
        raise IngestionError(f"{args.data}: no DFW column")
    assignment = assign_stages(table, args.cut)
    rows = [[code, assignment.stages.get(i, "")]
            for i, code in enumerate(table.codes)]
    Path(args.out).write_text(_csv_text(["code", "stage"], rows), encoding="utf-8")
    counts = assignment.counts()
    print(f"First: {counts['First']}  Second: {counts['Second']}"
          + (f"  missing DFW: {len(assignment.missing)}" if assignment.missing else ""))
    return 0


def _cmd_ttest(args) -> int:
    table = parse_table(Path(args.data).read_text(encoding="utf-8"))
    battery = stage_ttest_battery(table, args.cut, alpha=args.alpha,
                                  pooled=args.pooled,
                                  split_first=args.split_first)
    Path(args.out).write_text(battery_csv(battery), encoding="utf-8")
    sig = [r.variable for r in battery.results if r.significant]
    print(f"tested {len(battery.results)} columns, "
          f"{len(battery.untestable)} untestable; significant: "
          + (", ".join(sig) if sig else "none"))
    print(f"variance: {battery.variance}; quantiles: {QUANTILE_RULE}")
    return 0


def _cmd_report(args) -> int:
    out_dir = args.out_dir or _default_out_dir()
    report = report_for_dir(out_dir)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_run(args) -> int:
    skip = {s.strip() for s in args.skip.split(",") if s.strip()}
    unknown = skip - set(ALL_STAGES)
    if unknown:
        raise IngestionError(f"unknown stages in --skip: {sorted(unknown)}")
    config = RunConfig(
        nodes_path=args.nodes,
        edges_path=args.edges,
        variables_path=args.variables,
        out_dir=args.out_dir or _default_out_dir(),
        reference=args.reference,
        directed=args.directed,
        cut_override=args.cut_at,
        t_cut=args.t_cut,
        k_cut=args.k_cut,
        alpha=args.alpha,
        pooled=args.pooled,
        split_first=args.split_first,
        kde_points=args.points,
        bandwidth=args.bandwidth,
        fit_raw=args.fit_raw,
        emit=tuple(s for s in ALL_STAGES if s not in skip),
    )
    report = run_pipeline(config)
    net = report["network"]
    line = f"n={net['n']} m={net['m']}"
    if "kde" in report and "cut" in report["kde"]:
        line += f" cut={format_number(report['kde']['cut']['cut'])}"
    line += f" artifacts={len(report['artifacts'])} -> {config.out_dir}"
    print(line)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "metrics": _cmd_metrics,
    "fit": _cmd_fit,
    "kde": _cmd_kde,
    "stages": _cmd_stages,
    "ttest": _cmd_ttest,
    "report": _cmd_report,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        config_path = _find_config(argv)
        if config_path and argv:
            # Inject config-file values as tokens before the user's flags so
            # explicit flags override them.
            sub_actions = None
            for action in parser._actions:
                if isinstance(action, argparse._SubParsersAction):
                    sub_actions = action.choices
            command = argv[0]
            if sub_actions and command in sub_actions:
                tokens = _load_config_tokens(
                    config_path, sub_actions[command]._actions)
                argv = [command] + tokens + argv[1:]
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except IngestionError as exc:
        print(f"error (ingestion): {exc}", file=sys.stderr)
        return _EXIT_INGESTION
    except EmissionError as exc:
        print(f"error (emission): {exc}", file=sys.stderr)
        return _EXIT_EMISSION
    except AnalysisError as exc:
        print(f"error (analysis): {exc}", file=sys.stderr)
        return _EXIT_ANALYSIS
    except NetspreadError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_ANALYSIS
    except FileNotFoundError as exc:
        print(f"error (ingestion): {exc}", file=sys.stderr)
        return _EXIT_INGESTION


if __name__ == "__main__":
    sys.exit(main())
