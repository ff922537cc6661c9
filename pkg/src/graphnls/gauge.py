"""Radial gauge transform on tree graphs.

On a tree every point ``x`` is joined to the root by a unique path, so the
phase ``theta(x) = int_path M`` is well defined and ``theta' = M`` along every
edge.  Multiplication by ``exp(i theta)`` maps the non-magnetic operator onto
the magnetic one: ``(i d/dx + M)(e^{i theta} u) = e^{i theta} i u'``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import MeshMismatch, NotATree
from .graph import MetricGraph, is_tree
from .mesh import DiscreteField, Mesh, per_edge
from .operators import PotentialSpec, ProblemSpec, assemble_forms
from .spectral import clusters, lowest_eigenpairs

__all__ = ["PhaseField", "gauge_phase", "gauge_transform", "GaugeComparison", "spectral_invariance"]

_GL_T, _GL_W = np.polynomial.legendre.leggauss(8)


def _cumulative_integral(f, s: np.ndarray) -> np.ndarray:
    """``int_0^s f`` at every entry of ``s`` (Gauss rule between sorted points)."""
    s = np.asarray(s, dtype=float)
    order = np.argsort(s)
    ss = s[order]
    knots = np.concatenate([[0.0], ss])
    a, b = knots[:-1], knots[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_T[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    pieces = half * (vals @ _GL_W)
    out = np.empty_like(s)
    out[order] = np.cumsum(pieces)
    return out


@dataclass
class PhaseField:
    """Gauge phase ``theta`` with ``theta(root) = 0``.

    ``tail_phase[e]`` is theta at the tail of edge ``e``; on the edge,
    ``theta(s) = tail_phase[e] + int_0^s M_e``.  When built against a mesh the
    phase is also tabulated at quadrature points, mesh nodes and DOFs.
    """

    graph: MetricGraph
    root: str
    tail_phase: np.ndarray
    M_edges: list
    mesh: Mesh | None = None
    qp: np.ndarray | None = None
    nodes: np.ndarray | None = None
    dofs: np.ndarray | None = None

    def at(self, edge: int, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self.tail_phase[edge] + _cumulative_integral(self.M_edges[edge], s)

    def _on_mesh(self, mesh: Mesh) -> None:
        self.mesh = mesh
        qp = np.empty(len(mesh.qp_s))
        for ei in range(len(self.graph.edges)):
            sel = mesh.qp_edge == ei
            qp[sel] = self.at(ei, mesh.qp_s[sel])
        self.qp = qp
        pe, ps = mesh.node_position
        theta_node = np.empty(len(ps))
        for ei in np.unique(pe):
            sel = pe == ei
            theta_node[sel] = self.at(int(ei), ps[sel])
        edges, s = mesh.node_coords
        rows = np.empty(len(s))
        for ei in np.unique(edges):
            sel = edges == ei
            rows[sel] = self.at(int(ei), s[sel])
        self.nodes = rows
        self.dofs = theta_node[mesh.dof_node]


def gauge_phase(g: MetricGraph, M, root: str | None = None, mesh: Mesh | None = None) -> PhaseField:
    """Accumulate ``int M`` along the unique root-to-point paths of a tree.

    ``M`` is a magnetic spec (number, callable of arc length or per-edge
    list/dict).  The default root is the lexicographically first vertex.
    """
    if not is_tree(g):
        raise NotATree("the gauge phase is only defined on trees")
    if root is None:
        root = sorted(g.vertices)[0]
    g.vertex_index(root)
    if mesh is not None and mesh.graph is not g:
        raise MeshMismatch("mesh is built on a different graph")
    Ms = per_edge(M, len(g.edges))
    full = [0.0 if e.is_ray else float(_cumulative_integral(Ms[i], np.array([e.length]))[0])
            for i, e in enumerate(g.edges)]
    vertex_phase = {root: 0.0}
    tail = np.zeros(len(g.edges))
    done = np.zeros(len(g.edges), dtype=bool)
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for ei, end in g.incident(v):
            if done[ei]:
                continue
            done[ei] = True
            e = g.edges[ei]
            if end == 0:
                tail[ei] = vertex_phase[v]
                if not e.is_ray:
                    vertex_phase[e.head] = tail[ei] + full[ei]
                    queue.append(e.head)
            else:
                tail[ei] = vertex_phase[v] - full[ei]
                vertex_phase[e.tail] = tail[ei]
                queue.append(e.tail)
    out = PhaseField(g, root, tail, Ms)
    if mesh is not None:
        out._on_mesh(mesh)
    return out


def gauge_transform(u: DiscreteField, theta: PhaseField, direction: str = "forward") -> DiscreteField:
    """Multiply ``u`` by ``exp(i theta)`` (forward) or ``exp(-i theta)`` (inverse).

    The phase is carried exactly at quadrature points and nodes; it is folded
    into the coefficients only when the field is materialized.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    if theta.mesh is None or theta.mesh is not u.mesh:
        raise MeshMismatch("phase and field use different meshes")
    sg = 1.0 if direction == "forward" else -1.0
    add = (sg * theta.qp, sg * theta.nodes, sg * theta.dofs)
    phase = add if u.phase is None else tuple(a + b for a, b in zip(u.phase, add))
    return DiscreteField(u.mesh, u.coeffs, phase)


@dataclass
class GaugeComparison:
    eigenvalues_magnetic: list
    eigenvalues_plain: list
    max_relative_gap: float
    vector_distances: list  # L2 distance up to global phase, per eigenpair or per cluster
    clusters: list


def _qp_inner(mesh, a, b):
    return complex(np.sum(mesh.qp_w * np.conj(a) * b))


def spectral_invariance(prob: ProblemSpec, mesh: Mesh, m: int = 4, root: str | None = None,
                        gap: float = 1e-6) -> GaugeComparison:
    """Compare the ``m`` lowest eigenpairs of ``A^M`` and ``A^0`` on a tree.

    Eigenvectors of ``A^M`` are gauged back by ``exp(-i theta)`` and compared
    with those of ``A^0`` in L2 up to a global phase; inside a degenerate
    cluster the sine of the largest principal angle between the spanned
    subspaces is reported instead.
    """
    theta = gauge_phase(prob.graph, prob.potentials.M, root, mesh)
    plain = prob.with_(potentials=PotentialSpec(V=prob.potentials.V))
    pm = lowest_eigenpairs(assemble_forms(mesh, prob), m)
    p0 = lowest_eigenpairs(assemble_forms(mesh, plain), m)
    lm = [lam for lam, _ in pm]
    l0 = [lam for lam, _ in p0]
    rel = max(abs(a - b) / max(abs(b), 1e-12) if abs(b) > 1e-12 else abs(a - b) for a, b in zip(lm, l0))
    groups = clusters(l0, gap)
    dists = []
    for grp in groups:
        back = [gauge_transform(pm[j][1], theta, "inverse").at_quad(0) for j in grp]
        ref = [p0[j][1].at_quad(0) for j in grp]
        G = np.array([[_qp_inner(mesh, r, b) for b in back] for r in ref])
        if len(grp) == 1:
            d2 = 2.0 - 2.0 * abs(G[0, 0])
            dists.append(math.sqrt(max(0.0, d2)))
        else:
            smin = np.linalg.svd(G, compute_uv=False).min()
            dists.append(math.sqrt(max(0.0, 1.0 - min(1.0, smin) ** 2)))
    return GaugeComparison(lm, l0, rel, dists, groups)
