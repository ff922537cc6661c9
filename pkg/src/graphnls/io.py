"""Graph files, region strings and structured text output.

A graph file is JSON::

    {"vertices": ["a", "b"],
     "edges": [{"from": "a", "to": "b", "length": 3.14, "V": "-2*exp(-x^2)"},
               {"from": "b", "to": "ray", "M": "sin(x)"}]}

``x`` in the expressions is the arc length from the edge tail (for rays, from
the attached vertex).  Results are written as a header block echoing the
configuration, data rows, and a ``key=value`` summary block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SchemaError
from .expr import parse_expression
from .graph import RAY, GraphPoint, MetricGraph, RegionSpec, build_graph
from .operators import PotentialSpec

__all__ = [
    "GraphFile",
    "parse_graph_file",
    "serialize_graph",
    "parse_region",
    "format_region",
    "format_value",
    "render_output",
]

TOP_KEYS = {"vertices", "edges"}
EDGE_KEYS = {"from", "to", "length", "V", "M"}


@dataclass
class GraphFile:
    description: dict
    graph: MetricGraph
    V: list  # Expression or None per edge
    M: list

    def potentials(self) -> PotentialSpec:
        def spec(exprs):
            if all(e is None for e in exprs):
                return None
            return [e if e is not None else 0.0 for e in exprs]

        return PotentialSpec(V=spec(self.V), M=spec(self.M))


def _expr(raw, i, key):
    if raw is None:
        return None
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = repr(float(raw))
    if not isinstance(raw, str):
        raise SchemaError(f"edges[{i}].{key} must be an expression string")
    try:
        return parse_expression(raw)
    except ParseError as exc:
        raise type(exc)(f"edges[{i}].{key}: {exc.message}", exc.line, exc.column) from None


def parse_graph_file(text: str) -> GraphFile:
    """Parse and validate a JSON graph file; unknown keys are rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object")
    extra = set(raw) - TOP_KEYS
    if extra:
        raise SchemaError(f"unknown top-level key {sorted(extra)[0]!r}")
    for key in TOP_KEYS:
        if key not in raw:
            raise SchemaError(f"missing key {key!r}")
    if not isinstance(raw["vertices"], list) or not all(isinstance(v, str) for v in raw["vertices"]):
        raise SchemaError("'vertices' must be a list of strings")
    if not isinstance(raw["edges"], list):
        raise SchemaError("'edges' must be a list")
    V, M = [], []
    for i, e in enumerate(raw["edges"]):
        if not isinstance(e, dict):
            raise SchemaError(f"edges[{i}] must be an object")
        extra = set(e) - EDGE_KEYS
        if extra:
            raise SchemaError(f"edges[{i}]: unknown key {sorted(extra)[0]!r}")
        for key in ("from", "to"):
            if not isinstance(e.get(key), str):
                raise SchemaError(f"edges[{i}].{key} must be a string")
        if "length" in e:
            if e.get("to") == RAY or e.get("from") == RAY:
                raise SchemaError(f"edges[{i}].length: rays carry no length")
            if isinstance(e["length"], bool) or not isinstance(e["length"], (int, float)):
                raise SchemaError(f"edges[{i}].length must be a number")
        V.append(_expr(e.get("V"), i, "V"))
        M.append(_expr(e.get("M"), i, "M"))
    g = build_graph(raw)
    return GraphFile(raw, g, V, M)


def serialize_graph(gf: GraphFile | MetricGraph) -> str:
    """Canonical JSON text of a graph (and its potentials)."""
    if isinstance(gf, MetricGraph):
        desc = gf.to_description()
    else:
        desc = gf.graph.to_description()
        for e, v, m in zip(desc["edges"], gf.V, gf.M):
            if v is not None:
                e["V"] = v.text
            if m is not None:
                e["M"] = m.text
    return json.dumps(desc, sort_keys=True, indent=1) + "\n"


def parse_region(text: str | None, g: MetricGraph) -> RegionSpec | None:
    """``"all"``, ``"v:<vertex>"`` items or ``"<edge>:<lo>..<hi>"`` items, comma separated."""
    if text is None or not text.strip():
        return None
    text = text.strip()
    if text == "all":
        return RegionSpec.whole_graph()
    pieces = []
    for item in text.split(","):
        item = item.strip()
        head, sep, rest = item.partition(":")
        if not sep:
            raise SchemaError(f"region item {item!r} needs 'edge:lo..hi' or 'v:vertex'")
        if head == "v":
            p = GraphPoint.at_vertex(g, rest)
            pieces.append((p.edge, p.s, p.s))
            continue
        lo, dots, hi = rest.partition("..")
        try:
            ei, a, b = int(head), float(lo), float(hi)
        except ValueError:
            raise SchemaError(f"region item {item!r} is malformed") from None
        if not dots or not 0 <= ei < len(g.edges) or b < a:
            raise SchemaError(f"region item {item!r} is out of range")
        pieces.append((ei, a, b))
    return RegionSpec.from_intervals(g, pieces)


def format_region(region: RegionSpec | None) -> str:
    if region is None:
        return "none"
    if region.whole:
        return "all"
    return ",".join(f"{ei}:{format_value(lo)}..{format_value(hi)}" for ei, lo, hi in region.pieces())


def format_value(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(format_value(x) for x in v) + "]"
    return str(v)


def render_output(command: str, config: dict, columns: list, rows: list, summary: dict) -> str:
    """Header block (config echo), data rows and summary block."""
    lines = [f"# graphnls {command}", "# config"]
    lines += [f"{k} = {format_value(v)}" for k, v in config.items()]
    lines.append("# data")
    lines.append(" ".join(columns))
    lines += [" ".join(format_value(x) for x in row) for row in rows]
    lines.append("# summary")
    lines += [f"{k}={format_value(v)}" for k, v in summary.items()]
    return "\n".join(lines) + "\n"
