"""Choropleth emission: capital-city point maps as GeoJSON plus SVG.

Countries render as points at their capitals (no polygon data needed);
the continuous palette interpolates red -> yellow -> green across the
value range, binary stage maps use two fixed colors, and nodes without a
value render neutral.  Web Mercator coordinates ride along as feature
properties and drive the SVG placement.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

from . import __version__
from .errors import EmissionError
from .model import EARTH_RADIUS_M, FlowNetwork, web_mercator

PALETTE_ANCHORS = ("#ff0000", "#ffff00", "#00ff00")  # low -> mid -> high
NEUTRAL_COLOR = "#c0c0c0"
STAGE_COLORS = {"First": "#ff0000", "Second": "#00ff00"}


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    return int(color[1:3], 16), int(color[3:5], 16), int(color[5:7], 16)


def _rgb_to_hex(rgb: tuple[float, float, float]) -> str:
    return "#" + "".join(f"{round(c):02x}" for c in rgb)


def continuous_color(value: float, vmin: float, vmax: float) -> str:
    """Linear RGB interpolation across the three palette anchors.

    A degenerate range (vmin == vmax) maps everything to the low anchor.
    """
    if vmax <= vmin:
        return PALETTE_ANCHORS[0]
    t = (value - vmin) / (vmax - vmin)
    t = min(max(t, 0.0), 1.0)
    if t <= 0.5:
        lo, hi, local = _hex_to_rgb(PALETTE_ANCHORS[0]), _hex_to_rgb(PALETTE_ANCHORS[1]), t * 2.0
    else:
        lo, hi, local = _hex_to_rgb(PALETTE_ANCHORS[1]), _hex_to_rgb(PALETTE_ANCHORS[2]), (t - 0.5) * 2.0
    return _rgb_to_hex(tuple(a + (b - a) * local for a, b in zip(lo, hi)))


def _node_color(node_id: int, values: dict, palette: str,
                vmin: float, vmax: float) -> tuple[object, str]:
    if node_id not in values:
        return None, NEUTRAL_COLOR
    value = values[node_id]
    if palette == "binary":
        if value not in STAGE_COLORS:
            raise EmissionError(
                f"binary palette expects stage labels {sorted(STAGE_COLORS)}, "
                f"got {value!r}")
        return value, STAGE_COLORS[value]
    return float(value), continuous_color(float(value), vmin, vmax)


def emit_choropleth(net: FlowNetwork, values: dict, out_geojson: str | Path,
                    out_svg: str | Path, palette: str = "continuous",
                    value_name: str = "value") -> dict:
    """Write the GeoJSON feature collection and its SVG rendering.

    ``values`` maps node id to a number (continuous) or a stage label
    (binary).  Every network node appears exactly once; uncovered nodes
    are neutral.  Returns palette metadata echoed into both files.
    """
    if palette not in ("continuous", "binary"):
        raise ValueError(f"palette must be continuous/binary, got {palette!r}")
    if not values:
        raise EmissionError("choropleth needs a non-empty value map")
    unknown = set(values) - {node.id for node in net.nodes}
    if unknown:
        raise EmissionError(f"value map references unknown node ids {sorted(unknown)}")

    if palette == "continuous":
        numeric = [float(v) for v in values.values()]
        vmin, vmax = min(numeric), max(numeric)
        palette_meta = {"kind": "continuous", "anchors": list(PALETTE_ANCHORS),
                        "neutral": NEUTRAL_COLOR, "vmin": vmin, "vmax": vmax}
    else:
        vmin = vmax = 0.0
        palette_meta = {"kind": "binary", "colors": dict(STAGE_COLORS),
                        "neutral": NEUTRAL_COLOR}

    features = []
    rendered = []  # (x, y, color, code) in mercator meters
    for node in net.nodes:
        value, color = _node_color(node.id, values, palette, vmin, vmax)
        mx, my = web_mercator(node.capital_lon, node.capital_lat)
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point",
                         "coordinates": [node.capital_lon, node.capital_lat]},
            "properties": {
                "code": node.code,
                "name": node.name,
                "continent": node.continent,
                value_name: value,
                "color": color,
                "mercator_x": mx,
                "mercator_y": my,
            },
        })
        rendered.append((mx, my, color, node.code))

    collection = {
        "type": "FeatureCollection",
        "properties": {
            "generator": f"netspread {__version__}",
            "value_name": value_name,
            "palette": palette_meta,
        },
        "features": features,
    }
    Path(out_geojson).write_text(
        json.dumps(collection, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    Path(out_svg).write_text(
        _map_svg(rendered, palette_meta, value_name), encoding="utf-8")
    return palette_meta


def _map_svg(rendered: list, palette_meta: dict, value_name: str) -> str:
    """Square Web Mercator frame with 30-degree graticule and value points."""
    size = 560.0
    margin = 30.0
    world = math.pi * EARTH_RADIUS_M  # half-extent of the square map

    def px(mx: float) -> float:
        return margin + (mx + world) / (2 * world) * (size - 2 * margin)

    def py(my: float) -> float:
        return margin + (world - my) / (2 * world) * (size - 2 * margin)

    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" '
        f'height="{size:g}" viewBox="0 0 {size:g} {size:g}">',
        f"<!-- generator: netspread {__version__} -->",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<rect x="{margin:g}" y="{margin:g}" width="{size - 2 * margin:g}" '
        f'height="{size - 2 * margin:g}" fill="#f4f8fb" stroke="#000000"/>',
    ]
    for lon in range(-150, 180, 30):
        x = px(web_mercator(lon, 0.0)[0])
        body.append(f'<line x1="{x:.2f}" y1="{margin:g}" x2="{x:.2f}" '
                    f'y2="{size - margin:g}" stroke="#d8dee9" stroke-width="0.5"/>')
        body.append(f'<text x="{x:.2f}" y="{size - margin + 12:g}" font-size="8" '
                    f'text-anchor="middle">{lon}</text>')
    for lat in (-60, -30, 0, 30, 60):
        y = py(web_mercator(0.0, float(lat))[1])
        body.append(f'<line x1="{margin:g}" y1="{y:.2f}" x2="{size - margin:g}" '
                    f'y2="{y:.2f}" stroke="#d8dee9" stroke-width="0.5"/>')
        body.append(f'<text x="{margin - 4:g}" y="{y:.2f}" font-size="8" '
                    f'text-anchor="end">{lat}</text>')

    for mx, my, color, code in rendered:
        my = min(max(my, -world), world)  # capitals never exceed the frame, but be safe
        body.append(f'<circle cx="{px(mx):.2f}" cy="{py(my):.2f}" r="4" '
                    f'fill="{color}" stroke="#333333" stroke-width="0.5">'
                    f'<title>{escape(code)}</title></circle>')

    legend_y = 16.0
    if palette_meta["kind"] == "continuous":
        stops = [(palette_meta["vmin"], PALETTE_ANCHORS[0]),
                 ((palette_meta["vmin"] + palette_meta["vmax"]) / 2.0, PALETTE_ANCHORS[1]),
                 (palette_meta["vmax"], PALETTE_ANCHORS[2])]
        for i, (val, color) in enumerate(stops):
            x = margin + i * 120.0
            body.append(f'<rect x="{x:g}" y="{legend_y - 9:g}" width="10" height="10" '
                        f'fill="{color}" stroke="#333333" stroke-width="0.5"/>')
            body.append(f'<text x="{x + 14:g}" y="{legend_y:g}" font-size="9">'
                        f'{escape(value_name)} = {val:.6g}</text>')
    else:
        for i, (label, color) in enumerate(sorted(palette_meta["colors"].items())):
            x = margin + i * 120.0
            body.append(f'<rect x="{x:g}" y="{legend_y - 9:g}" width="10" height="10" '
                        f'fill="{color}" stroke="#333333" stroke-width="0.5"/>')
            body.append(f'<text x="{x + 14:g}" y="{legend_y:g}" font-size="9">'
                        f'{escape(label)}</text>')

    body.append("</svg>")
    return "\n".join(body) + "\n"
