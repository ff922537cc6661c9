"""Metric graphs with rays, point distances, R-neighbourhoods and topology.

A metric graph is stored as a list of vertex ids and a list of edges.  Every
edge carries an arc-length coordinate running from its tail vertex to its head
vertex; a ray has no head and the coordinate runs over ``[0, inf)`` starting at
the attached vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import (
    CompactGraphUnsupported,
    DisconnectedGraph,
    EmptyRegion,
    NonPositiveLength,
    PointNotOnGraph,
    RayBetweenInfiniteVertices,
    SchemaError,
)

RAY = "ray"

__all__ = [
    "RAY",
    "Edge",
    "MetricGraph",
    "GraphPoint",
    "RegionSpec",
    "build_graph",
    "distance",
    "distance_to_region",
    "neighborhood",
    "classify_h_condition",
    "is_tree",
    "interval_graph",
    "star_graph",
    "real_line",
    "core_region",
]


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str | None
    length: float

    @property
    def is_ray(self) -> bool:
        return self.head is None


class MetricGraph:
    """Connected metric graph with finitely many edges, some of which may be rays.

    Instances are immutable once built; use :func:`build_graph` to construct
    one from a description dictionary.
    """

    def __init__(self, vertices: Sequence[str], edges: Sequence[Edge]):
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        self._index = {v: i for i, v in enumerate(self.vertices)}
        incident: dict[str, list[tuple[int, int]]] = {v: [] for v in self.vertices}
        for ei, e in enumerate(self.edges):
            incident[e.tail].append((ei, 0))
            if e.head is not None:
                incident[e.head].append((ei, 1))
        self._incident = {v: tuple(lst) for v, lst in incident.items()}

    def __repr__(self):
        return (f"MetricGraph({len(self.vertices)} vertices, {len(self.edges)} edges, "
                f"{len(self.rays)} rays)")

    # -- structure ----------------------------------------------------
    def vertex_index(self, v: str) -> int:
        return self._index[v]

    def incident(self, v: str) -> tuple[tuple[int, int], ...]:
        """Edge ends at ``v`` as ``(edge index, end)`` with end 0 = tail, 1 = head."""
        return self._incident[v]

    def degree(self, v: str) -> int:
        return len(self._incident[v])

    @cached_property
    def rays(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.edges) if e.is_ray)

    @property
    def is_compact(self) -> bool:
        return not self.rays

    @property
    def is_finite(self) -> bool:
        # finitely many edges by construction
        return True

    @property
    def kind(self) -> str:
        return "compact" if self.is_compact else "noncompact finite"

    @cached_property
    def vertex_distances(self) -> np.ndarray:
        n = len(self.vertices)
        rows, cols, vals = [], [], []
        for e in self.edges:
            if e.is_ray or e.head == e.tail:
                continue
            a, b = self._index[e.tail], self._index[e.head]
            rows += [a, b]
            cols += [b, a]
            vals += [e.length, e.length]
        if not rows:
            return np.zeros((n, n))
        # duplicate entries in COO are summed; keep the minimum instead
        best: dict[tuple[int, int], float] = {}
        for r, c, v in zip(rows, cols, vals):
            best[(r, c)] = min(v, best.get((r, c), math.inf))
        keys = list(best)
        mat = coo_matrix(([best[k] for k in keys], ([k[0] for k in keys], [k[1] for k in keys])),
                         shape=(n, n)).tocsr()
        return shortest_path(mat, directed=False)

    def edge_length(self, ei: int) -> float:
        return self.edges[ei].length

    def to_description(self) -> dict:
        edges = []
        for e in self.edges:
            if e.is_ray:
                edges.append({"from": e.tail, "to": RAY})
            else:
                edges.append({"from": e.tail, "to": e.head, "length": e.length})
        return {"vertices": list(self.vertices), "edges": edges}


def build_graph(description: Mapping) -> MetricGraph:
    """Validate a ``{"vertices": [...], "edges": [...]}`` description.

    Edges are dictionaries with ``from``, ``to`` (a vertex id or ``"ray"``)
    and ``length`` (finite edges only).  Extra per-edge keys such as
    potential expressions are ignored here.
    """
    try:
        vertices = [str(v) for v in description["vertices"]]
        raw_edges = list(description["edges"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"graph description needs 'vertices' and 'edges': {exc}") from None
    if not vertices:
        raise SchemaError("graph has no vertices")
    if len(set(vertices)) != len(vertices):
        raise SchemaError("duplicate vertex ids")
    known = set(vertices)

    edges = []
    for i, raw in enumerate(raw_edges):
        tail, head = raw.get("from"), raw.get("to")
        if tail == RAY and head == RAY:
            raise RayBetweenInfiniteVertices(f"edge {i} joins two vertices at infinity")
        if tail == RAY:
            tail, head = head, tail
        tail = str(tail)
        if tail not in known:
            raise SchemaError(f"edge {i}: unknown vertex {tail!r}")
        if head == RAY:
            if raw.get("length") not in (None, math.inf):
                raise SchemaError(f"edge {i}: rays carry no length")
            edges.append(Edge(tail, None, math.inf))
            continue
        head = str(head)
        if head not in known:
            raise SchemaError(f"edge {i}: unknown vertex {head!r}")
        length = raw.get("length")
        if length is None:
            raise SchemaError(f"edge {i}: missing length")
        length = float(length)
        if not length > 0 or not math.isfinite(length):
            raise NonPositiveLength(f"edge {i} has length {length}")
        edges.append(Edge(tail, head, length))

    # connectivity via union-find on finite edges; rays never join vertices
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in edges:
        if e.head is not None:
            parent[find(e.tail)] = find(e.head)
    roots = {find(v) for v in vertices}
    if len(roots) > 1:
        raise DisconnectedGraph(f"graph has {len(roots)} connected components")
    return MetricGraph(vertices, edges)


# -- convenience constructors ---------------------------------------------

def interval_graph(length: float) -> MetricGraph:
    return build_graph({"vertices": ["v0", "v1"],
                        "edges": [{"from": "v0", "to": "v1", "length": length}]})


def star_graph(n: int, length: float | None = 1.0) -> MetricGraph:
    """Star with ``n`` edges oriented outward from vertex ``c``; ``length=None`` gives rays."""
    verts = ["c"]
    edges = []
    for i in range(n):
        if length is None:
            edges.append({"from": "c", "to": RAY})
        else:
            verts.append(f"t{i}")
            edges.append({"from": "c", "to": f"t{i}", "length": length})
    return build_graph({"vertices": verts, "edges": edges})


def real_line() -> MetricGraph:
    """The real line as two rays at vertex ``o``; edge 0 is the negative half-line."""
    return star_graph(2, None)


# -- points and distances --------------------------------------------------

@dataclass(frozen=True)
class GraphPoint:
    edge: int
    s: float

    def canonical(self, g: MetricGraph):
        e = _edge(g, self.edge)
        if not (0.0 <= self.s <= e.length) or math.isnan(self.s):
            raise PointNotOnGraph(f"coordinate {self.s} outside edge {self.edge}")
        if self.s == 0.0:
            return ("v", e.tail)
        if self.s == e.length:
            return ("v", e.head)
        return ("e", self.edge, self.s)

    @classmethod
    def at_vertex(cls, g: MetricGraph, v: str) -> "GraphPoint":
        if v not in g._index:
            raise PointNotOnGraph(f"unknown vertex {v!r}")
        ei, end = g.incident(v)[0]
        return cls(ei, 0.0 if end == 0 else g.edges[ei].length)


def _edge(g: MetricGraph, ei: int) -> Edge:
    if not 0 <= ei < len(g.edges):
        raise PointNotOnGraph(f"no edge {ei}")
    return g.edges[ei]


def _endpoint_costs(g: MetricGraph, p: GraphPoint) -> list[tuple[int, float]]:
    e = g.edges[p.edge]
    out = [(g.vertex_index(e.tail), p.s)]
    if e.head is not None:
        out.append((g.vertex_index(e.head), e.length - p.s))
    return out


def distance(g: MetricGraph, x: GraphPoint, y: GraphPoint) -> float:
    """Length of the shortest path between two points of ``g``."""
    cx, cy = x.canonical(g), y.canonical(g)
    if cx == cy:
        return 0.0
    D = g.vertex_distances
    best = math.inf
    if x.edge == y.edge:
        best = abs(x.s - y.s)
    for a, da in _endpoint_costs(g, x):
        for b, db in _endpoint_costs(g, y):
            best = min(best, da + D[a, b] + db)
    return float(best)


# -- regions ----------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    """Finite union of closed subintervals of edges, or the whole graph."""

    intervals: Mapping[int, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    whole: bool = False

    @classmethod
    def whole_graph(cls) -> "RegionSpec":
        return cls({}, True)

    @classmethod
    def from_vertex(cls, g: MetricGraph, v: str) -> "RegionSpec":
        p = GraphPoint.at_vertex(g, v)
        return cls({p.edge: ((p.s, p.s),)}).normalized(g)

    @classmethod
    def from_intervals(cls, g: MetricGraph, pieces: Iterable[tuple[int, float, float]]) -> "RegionSpec":
        d: dict[int, list] = {}
        for ei, lo, hi in pieces:
            d.setdefault(int(ei), []).append((float(lo), float(hi)))
        return cls({k: tuple(v) for k, v in d.items()}).normalized(g)

    def is_empty(self) -> bool:
        return not self.whole and not any(self.intervals.values())

    def is_bounded(self, g: MetricGraph) -> bool:
        if self.whole:
            return g.is_compact
        return all(math.isfinite(hi) for ivs in self.intervals.values() for _, hi in ivs)

    def normalized(self, g: MetricGraph) -> "RegionSpec":
        """Clip to edge bounds, merge overlaps, and mirror vertex membership onto all incident edges."""
        if self.whole:
            return self
        merged = {}
        touched: set[str] = set()
        for ei, ivs in self.intervals.items():
            e = _edge(g, ei)
            clipped = sorted((max(0.0, lo), min(e.length, hi)) for lo, hi in ivs
                             if hi >= 0.0 and lo <= e.length and hi >= lo)
            out: list[list[float]] = []
            for lo, hi in clipped:
                if out and lo <= out[-1][1]:
                    out[-1][1] = max(out[-1][1], hi)
                else:
                    out.append([lo, hi])
            if out:
                merged[ei] = out
                if out[0][0] == 0.0:
                    touched.add(e.tail)
                if e.head is not None and out[-1][1] == e.length:
                    touched.add(e.head)
        for v in touched:
            for ei, end in g.incident(v):
                s = 0.0 if end == 0 else g.edges[ei].length
                ivs = merged.setdefault(ei, [])
                if not any(lo <= s <= hi for lo, hi in ivs):
                    ivs.append([s, s])
                    ivs.sort()
        return RegionSpec({ei: tuple((lo, hi) for lo, hi in ivs) for ei, ivs in sorted(merged.items())})

    def contains(self, ei: int, s: np.ndarray, tol: float = 0.0) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.whole:
            return np.ones(s.shape, dtype=bool)
        mask = np.zeros(s.shape, dtype=bool)
        for lo, hi in self.intervals.get(ei, ()):
            mask |= (s >= lo - tol) & (s <= hi + tol)
        return mask

    def total_length(self, g: MetricGraph) -> float:
        if self.whole:
            return float(sum(e.length for e in g.edges))
        return float(sum(hi - lo for ivs in self.intervals.values() for lo, hi in ivs))

    def pieces(self) -> list[tuple[int, float, float]]:
        return [(ei, lo, hi) for ei, ivs in self.intervals.items() for lo, hi in ivs]


def core_region(g: MetricGraph) -> RegionSpec:
    """All finite edges plus every vertex; the complement of the open rays."""
    pieces = [(i, 0.0, e.length) for i, e in enumerate(g.edges) if not e.is_ray]
    for i in g.rays:
        pieces.append((i, 0.0, 0.0))
    return RegionSpec.from_intervals(g, pieces)


def _vertex_distance_to_region(g: MetricGraph, K: RegionSpec) -> np.ndarray:
    D = g.vertex_distances
    best = np.full(len(g.vertices), np.inf)
    for ei, lo, hi in K.pieces():
        e = g.edges[ei]
        a = g.vertex_index(e.tail)
        best = np.minimum(best, lo + D[a])
        if e.head is not None:
            b = g.vertex_index(e.head)
            best = np.minimum(best, (e.length - hi) + D[b])
    return best


def distance_to_region(g: MetricGraph, K: RegionSpec, ei: int, s) -> np.ndarray:
    """Vectorised ``dist((ei, s), K)`` for arc-length samples ``s`` on edge ``ei``."""
    s = np.asarray(s, dtype=float)
    if K.whole:
        return np.zeros(s.shape)
    if K.is_empty():
        raise EmptyRegion("distance to an empty region")
    dv = _vertex_distance_to_region(g, K)
    e = g.edges[ei]
    out = s + dv[g.vertex_index(e.tail)]
    if e.head is not None:
        out = np.minimum(out, (e.length - s) + dv[g.vertex_index(e.head)])
    for lo, hi in K.intervals.get(ei, ()):
        out = np.minimum(out, np.maximum(0.0, np.maximum(lo - s, s - hi)))
    return out


def neighborhood(g: MetricGraph, K: RegionSpec, R: float) -> RegionSpec:
    """The R-neighbourhood of ``K``, returned in closure-normalised form."""
    if K.is_empty():
        raise EmptyRegion("neighbourhood of an empty region")
    if R < 0:
        raise ValueError("R must be nonnegative")
    K = K.normalized(g)
    if K.whole or R == 0:
        return K
    dv = _vertex_distance_to_region(g, K)
    pieces = []
    for ei, e in enumerate(g.edges):
        da = dv[g.vertex_index(e.tail)]
        if da < R:
            pieces.append((ei, 0.0, R - da))
        if e.head is not None:
            db = dv[g.vertex_index(e.head)]
            if db < R:
                pieces.append((ei, e.length - (R - db), e.length))
        for lo, hi in K.intervals.get(ei, ()):
            pieces.append((ei, lo - R, hi + R))
    return RegionSpec.from_intervals(g, pieces)


# -- topology ----------------------------------------------------------------

def is_tree(g: MetricGraph) -> bool:
    """True iff ``g`` has no cycle; rays never close one."""
    finite = [e for e in g.edges if not e.is_ray]
    if any(e.head == e.tail for e in finite):
        return False
    return len(finite) == len(g.vertices) - 1


def _flow_network(g: MetricGraph, skip_edge: int | None = None):
    net = nx.DiGraph()
    net.add_nodes_from(g.vertices)
    net.add_node("inf")

    def bump(a, b, c=1):
        for u, v in ((a, b), (b, a)):
            cap = net.get_edge_data(u, v, {"capacity": 0})["capacity"]
            net.add_edge(u, v, capacity=cap + c)

    for ei, e in enumerate(g.edges):
        if ei == skip_edge or e.head == e.tail:
            continue
        bump(e.tail, "inf" if e.is_ray else e.head)
    return net, bump


def _two_escape_routes(g: MetricGraph, point) -> bool:
    """(H) at one point: two edge-disjoint routes to infinity, sharing at most vertices."""
    kind, where = point
    if kind == "v":
        net, _ = _flow_network(g)
        src = where
    else:
        net, bump = _flow_network(g, skip_edge=where)
        e = g.edges[where]
        net.add_node("p")
        src = "p"
        bump("p", e.tail)
        bump("p", "inf" if e.is_ray else e.head)
    return nx.maximum_flow_value(net, src, "inf") >= 2


def _components_ok(g: MetricGraph, point, seed: str) -> bool:
    """Every component of g minus the point is unbounded or holds the seed."""
    kind, where = point
    h = nx.MultiGraph()
    h.add_nodes_from(v for v in g.vertices if not (kind == "v" and v == where))
    stub = 0

    def end_node(v):
        nonlocal stub
        if kind == "v" and v == where:
            stub += 1
            h.add_node(("stub", stub))
            return ("stub", stub)
        return v

    for ei, e in enumerate(g.edges):
        if kind == "e" and ei == where:
            h.add_node(("stub", -1))
            h.add_edge(("stub", -1), end_node(e.tail))
            if e.is_ray:
                h.add_node(("inf", ei))
            else:
                h.add_node(("stub", -2))
                h.add_edge(("stub", -2), end_node(e.head))
            continue
        a = end_node(e.tail)
        b = ("inf", ei) if e.is_ray else end_node(e.head)
        h.add_edge(a, b)
    for comp in nx.connected_components(h):
        unbounded = any(isinstance(n, tuple) and n[0] == "inf" for n in comp)
        if not unbounded and seed not in comp:
            return False
    return True


def _h_bar_core_radius(g: MetricGraph) -> float | None:
    seed = sorted(g.vertices)[0]
    ds = g.vertex_distances[g.vertex_index(seed)]
    cands = {0.0}
    cands.update(float(d) for d in ds if math.isfinite(d))
    for e in g.edges:
        if e.is_ray:
            continue
        da, db = ds[g.vertex_index(e.tail)], ds[g.vertex_index(e.head)]
        cands.add(float(min(max(da, db), (da + db + e.length) / 2)))
    for c in sorted(cands):
        R = c + 1e-9
        ok = True
        for v in g.vertices:
            if ds[g.vertex_index(v)] >= R and not _components_ok(g, ("v", v), seed):
                ok = False
                break
        if ok:
            for ei, e in enumerate(g.edges):
                da = ds[g.vertex_index(e.tail)]
                if e.is_ray:
                    outside = True
                else:
                    db = ds[g.vertex_index(e.head)]
                    outside = (da + db + e.length) / 2 >= R
                if outside and not _components_ok(g, ("e", ei), seed):
                    ok = False
                    break
        if ok:
            return R
    return None


def classify_h_condition(g: MetricGraph) -> str:
    """Return ``"H"``, ``"H_bar"`` or ``"neither"`` for a noncompact graph.

    (H) is checked at every vertex and at one interior point per edge (all
    interior points of an edge are combinatorially equivalent) by a unit
    capacity max-flow to a sink joined to every ray.  (H_bar) uses the ball
    around the lexicographically first vertex as the precompact core and
    searches the smallest radius for which every point outside it leaves only
    components that are unbounded or contain the core.
    """
    if g.is_compact:
        raise CompactGraphUnsupported("the (H) conditions concern noncompact graphs")
    points = [("v", v) for v in g.vertices] + [("e", i) for i in range(len(g.edges))]
    if all(_two_escape_routes(g, p) for p in points):
        return "H"
    if _h_bar_core_radius(g) is not None:
        return "H_bar"
    return "neither"
