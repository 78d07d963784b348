"""Network and tabular data model: parsing, validation, geo-referencing.

Input files are comma-delimited with a mandatory header:

    nodes.csv      code,name,continent,lon,lat
    edges.csv      origin,dest,weight
    variables.csv  code,DFW,<symbol columns...>

A node file loads first; edge and variable codes resolve against it.
Parsed structures are immutable and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import IngestionError

CONTINENTS = frozenset(
    {"Asia", "Europe", "NorthAmerica", "SouthAmerica", "Africa", "Oceania"}
)

# Conceptual group per known column symbol.  Free extra columns are
# accepted and sorted after these (group "extra").
GROUP_1D = (
    "DEG", "IN.DEG", "OUT.DEG", "STR", "IN.STR", "OUT.STR",
    "C", "CB", "CB.PAIR", "CC", "ECC", "ECCFC", "ECCFC.ABS",
)
GROUP_2D = ("GI", "GDP", "TFP", "POP", "HC", "GDP.pc", "TFP.pc")
GROUP_3D = ("CST", "DSTFC", "RDL", "RLL", "PRT", "APRT")

COLUMN_GROUPS: dict[str, str] = {}
COLUMN_GROUPS.update({name: "1D" for name in GROUP_1D})
COLUMN_GROUPS.update({name: "2D" for name in GROUP_2D})
COLUMN_GROUPS.update({name: "3D" for name in GROUP_3D})

EARTH_RADIUS_M = 6378137.0
# Just above the latitude where the Web Mercator map becomes square
# (~85.051129 deg, where y = pi * R); inputs beyond clamp with a warning.
MAX_MERCATOR_LAT = 85.06


def column_group(name: str) -> str:
    """Conceptual group of a variables-table column ("1D", "2D", "3D", "extra")."""
    return COLUMN_GROUPS.get(name, "extra")


def format_number(value: float) -> str:
    """Render a numeric cell at full precision; NaN becomes the empty field.

    Integral values drop the decimal point; everything else uses the shortest
    representation that parses back to the identical double, so serialized
    networks round-trip bit-equal.
    """
    v = float(value)
    if math.isnan(v):
        return ""
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


@dataclass(frozen=True)
class NodeRecord:
    """One country: stable id, ISO alpha-3 code, display name, geo reference."""

    id: int
    code: str
    name: str
    continent: str
    capital_lon: float
    capital_lat: float


@dataclass(frozen=True)
class FlowEdge:
    """Directed annual flow between two nodes (weight = traveler count)."""

    origin: int
    dest: int
    weight: float


@dataclass(frozen=True)
class FlowNetwork:
    """Directed weighted graph of countries and annual flow links."""

    nodes: tuple[NodeRecord, ...]
    edges: tuple[FlowEdge, ...]
    directed: bool = True

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    def code_to_id(self) -> dict[str, int]:
        return {node.code: node.id for node in self.nodes}

    def node_by_code(self, code: str) -> NodeRecord:
        for node in self.nodes:
            if node.code == code:
                return node
        raise KeyError(code)

    def out_adjacency(self) -> list[list[tuple[int, float]]]:
        """Per node, list of (dest, weight) for outgoing edges."""
        adj: list[list[tuple[int, float]]] = [[] for _ in self.nodes]
        for e in self.edges:
            adj[e.origin].append((e.dest, e.weight))
        return adj

    def in_adjacency(self) -> list[list[tuple[int, float]]]:
        """Per node, list of (origin, weight) for incoming edges."""
        adj: list[list[tuple[int, float]]] = [[] for _ in self.nodes]
        for e in self.edges:
            adj[e.dest].append((e.origin, e.weight))
        return adj

    def undirected_neighbors(self) -> list[set[int]]:
        """Binary undirected projection: u~v if either direction has an edge."""
        nbrs: list[set[int]] = [set() for _ in self.nodes]
        for e in self.edges:
            nbrs[e.origin].add(e.dest)
            nbrs[e.dest].add(e.origin)
        return nbrs

    def directed_neighbors(self) -> list[set[int]]:
        """Binary successor sets of the directed graph."""
        nbrs: list[set[int]] = [set() for _ in self.nodes]
        for e in self.edges:
            nbrs[e.origin].add(e.dest)
        return nbrs


@dataclass(frozen=True)
class VariablesTable:
    """Per-node numeric record, aligned to the companion network's node order.

    Missing cells are NaN, never silently zero; nodes absent from the input
    file are all-NaN rows listed in ``missing_codes``.
    """

    codes: tuple[str, ...]
    columns: dict[str, np.ndarray]
    column_order: tuple[str, ...]
    missing_codes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for arr in self.columns.values():
            arr.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.codes)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column named {name!r}")
        return self.columns[name]

    def with_columns(self, new_columns: dict[str, np.ndarray]) -> "VariablesTable":
        """Return a copy with extra columns appended (each of length n_rows)."""
        merged = dict(self.columns)
        order = list(self.column_order)
        for name, values in new_columns.items():
            arr = np.asarray(values, dtype=float)
            if arr.shape != (self.n_rows,):
                raise ValueError(f"column {name!r} has length {arr.shape}, "
                                 f"expected ({self.n_rows},)")
            if name in merged:
                raise ValueError(f"column {name!r} already present")
            merged[name] = arr
            order.append(name)
        return VariablesTable(self.codes, merged, tuple(order), self.missing_codes)


def web_mercator(lon: float, lat: float) -> tuple[float, float]:
    """Project (lon, lat) degrees to Web Mercator meters.

    x = R*lon_rad, y = R*ln(tan(pi/4 + lat_rad/2)) with R = 6378137.
    Latitudes beyond the square-map limit (~85.05 deg) clamp with a warning.
    """
    if abs(lat) > MAX_MERCATOR_LAT:
        warnings.warn(
            f"latitude {lat} outside Web Mercator range; "
            f"clamped to +/-{MAX_MERCATOR_LAT:.6f}",
            stacklevel=2,
        )
        lat = math.copysign(MAX_MERCATOR_LAT, lat)
    x = EARTH_RADIUS_M * math.radians(lon)
    # atanh(sin(phi)) == ln(tan(pi/4 + phi/2)), exact at the equator
    y = EARTH_RADIUS_M * math.atanh(math.sin(math.radians(lat)))
    return x, y


def _read_rows(text: str, expected_header: list[str] | None,
               what: str) -> tuple[list[str], list[list[str]]]:
    """Split delimited text into (header, rows); enforce a fixed header if given."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise IngestionError(f"{what}: input is empty")
    header = [cell.strip() for cell in rows[0]]
    if expected_header is not None and header != expected_header:
        raise IngestionError(
            f"{what}: expected header {','.join(expected_header)!r}, "
            f"got {','.join(header)!r}"
        )
    return header, rows[1:]


def _parse_float(cell: str, what: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise IngestionError(f"{what}: not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise IngestionError(f"{what}: non-finite value {cell!r}")
    return value


def parse_nodes(text: str) -> tuple[NodeRecord, ...]:
    """Parse the node file; ids are assigned in file order starting at 0."""
    _, rows = _read_rows(text, ["code", "name", "continent", "lon", "lat"], "nodes")
    nodes: list[NodeRecord] = []
    seen: set[str] = set()
    for i, row in enumerate(rows):
        where = f"nodes row {i + 2}"
        if len(row) != 5:
            raise IngestionError(f"{where}: expected 5 fields, got {len(row)}")
        code, name, continent, lon_s, lat_s = (cell.strip() for cell in row)
        if len(code) != 3 or not code.isalpha() or not code.isupper():
            raise IngestionError(f"{where}: code {code!r} is not ISO alpha-3")
        if code in seen:
            raise IngestionError(f"{where}: duplicate code {code!r}")
        if continent not in CONTINENTS:
            raise IngestionError(
                f"{where}: unknown continent {continent!r} "
                f"(expected one of {sorted(CONTINENTS)})"
            )
        lon = _parse_float(lon_s, f"{where}, lon")
        lat = _parse_float(lat_s, f"{where}, lat")
        if not -180.0 <= lon <= 180.0:
            raise IngestionError(f"{where}: lon {lon} outside [-180, 180]")
        if not -90.0 < lat < 90.0:
            raise IngestionError(f"{where}: lat {lat} outside (-90, 90)")
        seen.add(code)
        nodes.append(NodeRecord(len(nodes), code, name, continent, lon, lat))
    if not nodes:
        raise IngestionError("nodes: no data rows")
    return tuple(nodes)


def parse_edge_list(text: str, nodes: tuple[NodeRecord, ...]) -> FlowNetwork:
    """Parse origin,dest,weight rows into a validated FlowNetwork.

    Unknown codes, self-loops, negative weights and duplicate ordered pairs
    are ingestion errors naming the offending row.
    """
    _, rows = _read_rows(text, ["origin", "dest", "weight"], "edges")
    by_code = {node.code: node.id for node in nodes}
    edges: list[FlowEdge] = []
    seen_pairs: set[tuple[int, int]] = set()
    for i, row in enumerate(rows):
        where = f"edges row {i + 2}"
        if len(row) != 3:
            raise IngestionError(f"{where}: expected 3 fields, got {len(row)}")
        origin_code, dest_code, weight_s = (cell.strip() for cell in row)
        for code in (origin_code, dest_code):
            if code not in by_code:
                raise IngestionError(f"{where}: unknown code {code!r}")
        if origin_code == dest_code:
            raise IngestionError(f"{where}: self-loop on {origin_code!r}")
        weight = _parse_float(weight_s, f"{where}, weight")
        if weight < 0:
            raise IngestionError(f"{where}: negative weight {weight}")
        pair = (by_code[origin_code], by_code[dest_code])
        if pair in seen_pairs:
            raise IngestionError(
                f"{where}: duplicate edge {origin_code}->{dest_code}"
            )
        seen_pairs.add(pair)
        edges.append(FlowEdge(pair[0], pair[1], weight))
    return FlowNetwork(nodes=nodes, edges=tuple(edges))


def parse_variables(text: str, net: FlowNetwork) -> VariablesTable:
    """Parse the variables file against an already-loaded network.

    The result is aligned to the network's node order; nodes without a row
    become all-NaN rows reported in ``missing_codes``.  Empty cells are
    missing values.  CST must be binary; DFW must be non-negative integers.
    """
    header, rows = _read_rows(text, None, "variables")
    if not header or header[0] != "code":
        raise IngestionError("variables: first column must be 'code'")
    col_names = header[1:]
    if "DFW" not in col_names:
        raise IngestionError("variables: required column 'DFW' is absent")
    if len(set(col_names)) != len(col_names):
        raise IngestionError("variables: duplicate column names in header")

    by_code = net.code_to_id()
    n = net.n
    data = {name: np.full(n, np.nan) for name in col_names}
    seen: set[str] = set()
    for i, row in enumerate(rows):
        where = f"variables row {i + 2}"
        if len(row) != len(header):
            raise IngestionError(
                f"{where}: expected {len(header)} fields, got {len(row)}"
            )
        code = row[0].strip()
        if code not in by_code:
            raise IngestionError(f"{where}: code {code!r} not in the network")
        if code in seen:
            raise IngestionError(f"{where}: duplicate row for code {code!r}")
        seen.add(code)
        node_id = by_code[code]
        for name, cell in zip(col_names, row[1:]):
            cell = cell.strip()
            if cell == "":
                continue
            value = _parse_float(cell, f"{where}, column {name}")
            if name == "CST" and value not in (0.0, 1.0):
                raise IngestionError(
                    f"{where}: CST must be 0 or 1, got {format_number(value)}"
                )
            if name == "DFW" and (value < 0 or not float(value).is_integer()):
                raise IngestionError(
                    f"{where}: DFW must be a non-negative integer, got {cell!r}"
                )
            data[name][node_id] = value

    missing = tuple(node.code for node in net.nodes if node.code not in seen)
    return VariablesTable(
        codes=tuple(node.code for node in net.nodes),
        columns=data,
        column_order=tuple(col_names),
        missing_codes=missing,
    )


def parse_table(text: str) -> VariablesTable:
    """Parse a variables-style CSV on its own (no companion network).

    Used by CLI subcommands that operate on a table directly; applies the
    same cell rules as parse_variables (empty = missing, CST binary, DFW
    non-negative integers) but accepts any code set.
    """
    header, rows = _read_rows(text, None, "table")
    if not header or header[0] != "code":
        raise IngestionError("table: first column must be 'code'")
    col_names = header[1:]
    if len(set(col_names)) != len(col_names):
        raise IngestionError("table: duplicate column names in header")
    codes: list[str] = []
    cells: list[list[float]] = []
    seen: set[str] = set()
    for i, row in enumerate(rows):
        where = f"table row {i + 2}"
        if len(row) != len(header):
            raise IngestionError(
                f"{where}: expected {len(header)} fields, got {len(row)}")
        code = row[0].strip()
        if code in seen:
            raise IngestionError(f"{where}: duplicate row for code {code!r}")
        seen.add(code)
        codes.append(code)
        parsed: list[float] = []
        for name, cell in zip(col_names, row[1:]):
            cell = cell.strip()
            if cell == "":
                parsed.append(math.nan)
                continue
            value = _parse_float(cell, f"{where}, column {name}")
            if name == "CST" and value not in (0.0, 1.0):
                raise IngestionError(
                    f"{where}: CST must be 0 or 1, got {format_number(value)}")
            if name == "DFW" and (value < 0 or not float(value).is_integer()):
                raise IngestionError(
                    f"{where}: DFW must be a non-negative integer, got {cell!r}")
            parsed.append(value)
        cells.append(parsed)
    if not codes:
        raise IngestionError("table: no data rows")
    matrix = np.array(cells, dtype=float)
    columns = {name: matrix[:, j].copy() for j, name in enumerate(col_names)}
    return VariablesTable(codes=tuple(codes), columns=columns,
                          column_order=tuple(col_names))


def nodes_to_csv(net: FlowNetwork) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["code", "name", "continent", "lon", "lat"])
    for node in net.nodes:
        writer.writerow([node.code, node.name, node.continent,
                         format_number(node.capital_lon),
                         format_number(node.capital_lat)])
    return out.getvalue()


def edges_to_csv(net: FlowNetwork) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["origin", "dest", "weight"])
    for e in net.edges:
        writer.writerow([net.nodes[e.origin].code, net.nodes[e.dest].code,
                         format_number(e.weight)])
    return out.getvalue()


def variables_to_csv(table: VariablesTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["code", *table.column_order])
    for i, code in enumerate(table.codes):
        writer.writerow(
            [code, *(format_number(table.columns[name][i])
                     for name in table.column_order)]
        )
    return out.getvalue()
