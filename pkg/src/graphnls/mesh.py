"""Finite element meshes on metric graphs and discrete fields living on them.

Every edge is cut into uniform elements carrying Hermite polynomials of degree
``2k - 1``; rays are truncated at a fixed length with homogeneous Dirichlet
data at the far end.  At a graph vertex the even derivatives ``j <= k-1`` are
shared by all incident edges while the odd ones satisfy the zero-sum
(Kirchhoff) condition on inward derivatives.  The Kirchhoff constraints are
eliminated through a sparse constraint basis ``P`` mapping free degrees of
freedom to the broken (element-by-element) coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import polynomial as npoly

from .errors import (
    MeshMismatch,
    NonFiniteSample,
    TruncationTooCoarse,
    UnboundedRegion,
    UnsupportedOrder,
)
from .graph import MetricGraph, RegionSpec, distance_to_region, neighborhood

__all__ = [
    "TruncationPolicy",
    "Mesh",
    "DiscreteField",
    "UnityPair",
    "build_mesh",
    "interpolate",
    "norms",
    "partition_of_unity",
    "per_edge",
    "field_to_text",
    "field_from_text",
]


@dataclass(frozen=True)
class TruncationPolicy:
    """Rays are cut at ``length``; the far end carries homogeneous Dirichlet data."""

    length: float = 40.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("truncation length must be positive")


def per_edge(spec, n_edges: int) -> list[Callable]:
    """Normalise a scalar, a callable ``f(s)`` or a per-edge sequence/dict into callables."""
    if spec is None:
        spec = 0.0
    if isinstance(spec, dict):
        return [_as_callable(spec.get(i, 0.0)) for i in range(n_edges)]
    if isinstance(spec, (list, tuple)):
        if len(spec) != n_edges:
            raise ValueError(f"expected {n_edges} per-edge entries, got {len(spec)}")
        return [_as_callable(f) for f in spec]
    return [_as_callable(spec)] * n_edges


def _as_callable(f):
    if callable(f):
        return f
    c = float(f)
    return lambda s, c=c: np.full(np.shape(s), c)


def _hermite_reference(k: int) -> np.ndarray:
    """Monomial coefficients (column i = basis i) of the degree 2k-1 Hermite basis on [0, 1].

    Basis ordering: (t=0, j=0..k-1), then (t=1, j=0..k-1).
    """
    n = 2 * k
    cond = np.zeros((n, n))
    for row, (t, j) in enumerate([(0.0, j) for j in range(k)] + [(1.0, j) for j in range(k)]):
        for p in range(n):
            if p < j:
                continue
            coef = math.factorial(p) / math.factorial(p - j)
            cond[row, p] = coef * (t ** (p - j) if p > j else 1.0)
    return np.linalg.solve(cond, np.eye(n))


class Mesh:
    """Uniform Hermite mesh of a metric graph.

    Attributes of interest: ``n_dofs``, ``P`` (broken-from-free map),
    quadrature points ``qp_edge``, ``qp_s``, ``qp_w`` and the evaluation
    operators ``Q(m)`` giving the m-th arc-length derivative at the
    quadrature points.
    """

    def __init__(self, graph: MetricGraph, trunc: TruncationPolicy, h_target: float, k: int):
        if k not in (1, 2, 3):
            raise UnsupportedOrder(f"order k={k} not supported (k in 1..3)")
        if not h_target > 0:
            raise ValueError("h_target must be positive")
        if graph.rays and trunc.length / h_target < 10:
            raise TruncationTooCoarse(f"L/h = {trunc.length / h_target:.3g} < 10")
        self.graph = graph
        self.trunc = trunc
        self.k = k
        self.h_target = h_target
        self.nloc = 2 * k
        self.nq = 2 * k + 1

        lengths = np.array([trunc.length if e.is_ray else e.length for e in graph.edges])
        counts = np.maximum(1, np.ceil(lengths / h_target - 1e-9)).astype(int)
        self.edge_length = lengths
        self.edge_n = counts
        self.edge_h = lengths / counts
        self.edge_first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self.n_el = int(counts.sum())
        self.el_edge = np.repeat(np.arange(len(graph.edges)), counts)
        local = np.arange(self.n_el) - self.edge_first[self.el_edge]
        self.el_h = self.edge_h[self.el_edge]
        self.el_x0 = local * self.el_h

        self._build_dofs()
        self._build_quadrature()

    # -- degrees of freedom ------------------------------------------------
    def _build_dofs(self):
        g, k = self.graph, self.k
        n_free = 0
        dof_node, dof_order = [], []
        node_pos = []  # representative (edge, s) per node
        # end_map[(edge, end, j)] -> list of (free dof, coefficient)
        end_map: dict[tuple[int, int, int], list[tuple[int, float]]] = {}

        def new_dof(node, j):
            nonlocal n_free
            dof_node.append(node)
            dof_order.append(j)
            n_free += 1
            return n_free - 1

        self.vertex_node = {}
        for v in g.vertices:
            node = len(node_pos)
            self.vertex_node[v] = node
            inc = g.incident(v)
            ei0, end0 = inc[0]
            node_pos.append((ei0, 0.0 if end0 == 0 else self.edge_length[ei0]))
            for j in range(k):
                if j % 2 == 0:
                    d = new_dof(node, j)
                    for ei, end in inc:
                        end_map[(ei, end, j)] = [(d, 1.0)]
                    continue
                signs = [1.0 if end == 0 else -1.0 for _, end in inc]
                frees = [new_dof(node, j) for _ in inc[1:]]
                ei_p, end_p = inc[0]
                # pivot: a_p = -sigma_p * sum_i sigma_i a_i
                end_map[(ei_p, end_p, j)] = [(f, -signs[0] * s) for f, s in zip(frees, signs[1:])]
                for (ei, end), f in zip(inc[1:], frees):
                    end_map[(ei, end, j)] = [(f, 1.0)]

        rows, cols, vals = [], [], []
        self.node_of_el_side = np.zeros((self.n_el, 2), dtype=int)
        for ei, e in enumerate(g.edges):
            n = self.edge_n[ei]
            first = self.edge_first[ei]
            inner = []
            for i in range(1, n):
                node = len(node_pos)
                node_pos.append((ei, i * self.edge_h[ei]))
                inner.append((node, [new_dof(node, j) for j in range(k)]))
            for m in range(n):
                el = first + m
                for side, i in ((0, m), (1, m + 1)):
                    base = el * self.nloc + side * k
                    if i == 0:
                        self.node_of_el_side[el, side] = self.vertex_node[e.tail]
                        for j in range(k):
                            for d, c in end_map[(ei, 0, j)]:
                                rows.append(base + j); cols.append(d); vals.append(c)
                    elif i == n:
                        if e.is_ray:
                            self.node_of_el_side[el, side] = -1  # Dirichlet far end
                            continue
                        self.node_of_el_side[el, side] = self.vertex_node[e.head]
                        for j in range(k):
                            for d, c in end_map[(ei, 1, j)]:
                                rows.append(base + j); cols.append(d); vals.append(c)
                    else:
                        node, dofs = inner[i - 1]
                        self.node_of_el_side[el, side] = node
                        for j in range(k):
                            rows.append(base + j); cols.append(dofs[j]); vals.append(1.0)
        self.n_dofs = n_free
        self.dof_node = np.array(dof_node, dtype=int)
        self.dof_order = np.array(dof_order, dtype=int)
        self.node_pos = node_pos
        self.P = sp.csr_matrix((vals, (rows, cols)), shape=(self.n_el * self.nloc, n_free))

    # -- quadrature ----------------------------------------------------------
    def _build_quadrature(self):
        t, w = np.polynomial.legendre.leggauss(self.nq)
        t = 0.5 * (t + 1.0)
        w = 0.5 * w
        self.ref_t, self.ref_w = t, w
        self.qp_el = np.repeat(np.arange(self.n_el), self.nq)
        self.qp_edge = self.el_edge[self.qp_el]
        self.qp_s = (self.el_x0[:, None] + self.el_h[:, None] * t[None, :]).ravel()
        self.qp_w = (self.el_h[:, None] * w[None, :]).ravel()
        self._coef = _hermite_reference(self.k)

    def reference_values(self, m: int, t: np.ndarray) -> np.ndarray:
        """m-th t-derivative of every reference basis function, shape (len(t), 2k)."""
        out = np.empty((len(t), self.nloc))
        for i in range(self.nloc):
            c = npoly.polyder(self._coef[:, i], m) if m else self._coef[:, i]
            out[:, i] = npoly.polyval(t, c)
        return out

    def _broken_eval(self, m: int, t: np.ndarray) -> sp.csr_matrix:
        ref = self.reference_values(m, t)  # (nt, nloc)
        jloc = np.tile(np.arange(self.k), 2)
        # physical basis: h^j psi(x/h); m-th x-derivative scales by h^(j-m)
        scale = self.el_h[:, None] ** (jloc[None, :] - m)  # (n_el, nloc)
        blocks = ref[None, :, :] * scale[:, None, :]  # (n_el, nt, nloc)
        nt = len(t)
        rows = (np.arange(self.n_el)[:, None, None] * nt + np.arange(nt)[None, :, None])
        rows = np.broadcast_to(rows, blocks.shape)
        cols = (np.arange(self.n_el)[:, None, None] * self.nloc + np.arange(self.nloc)[None, None, :])
        cols = np.broadcast_to(cols, blocks.shape)
        return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(self.n_el * nt, self.n_el * self.nloc))

    def Q(self, m: int = 0) -> sp.csr_matrix:
        """Sparse map from free coefficients to the m-th derivative at quadrature points."""
        cache = self.__dict__.setdefault("_Qcache", {})
        if m not in cache:
            cache[m] = (self._broken_eval(m, self.ref_t) @ self.P).tocsr()
        return cache[m]

    @cached_property
    def node_eval(self) -> list[sp.csr_matrix]:
        """Maps from free coefficients to derivatives 0..k-1 at the left end of every element
        followed by the right end of each edge's last element (see ``node_coords``)."""
        return [self._node_eval(j) for j in range(self.k)]

    def _node_eval(self, j):
        left = self._broken_eval(j, np.array([0.0]))
        right = self._broken_eval(j, np.array([1.0]))
        last = self.edge_first + self.edge_n - 1
        return sp.vstack([left, right[last]]).tocsr() @ self.P

    @cached_property
    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        last = self.edge_first + self.edge_n - 1
        edges = np.concatenate([self.el_edge, self.el_edge[last]])
        s = np.concatenate([self.el_x0, self.el_x0[last] + self.el_h[last]])
        return edges, s

    @cached_property
    def node_position(self) -> tuple[np.ndarray, np.ndarray]:
        """(edge, s) of every node id; a vertex node reports one incident edge."""
        n_nodes = int(self.node_of_el_side.max()) + 1
        edges = np.zeros(n_nodes, dtype=int)
        s = np.zeros(n_nodes)
        for side in (1, 0):
            ids = self.node_of_el_side[:, side]
            ok = ids >= 0
            edges[ids[ok]] = self.el_edge[ok]
            s[ids[ok]] = self.el_x0[ok] + side * self.el_h[ok]
        return edges, s

    # -- region helpers ------------------------------------------------------
    def qp_in_region(self, K: RegionSpec, tol: float = 1e-12) -> np.ndarray:
        mask = np.zeros(len(self.qp_s), dtype=bool)
        for ei in range(len(self.graph.edges)):
            sel = self.qp_edge == ei
            mask[sel] = K.contains(ei, self.qp_s[sel], tol)
        return mask

    def distance_at(self, K: RegionSpec, edges: np.ndarray, s: np.ndarray) -> np.ndarray:
        out = np.empty(len(s))
        for ei in np.unique(edges):
            sel = edges == ei
            out[sel] = distance_to_region(self.graph, K, int(ei), s[sel])
        return out

    def elements_meeting(self, K: RegionSpec) -> np.ndarray:
        """Boolean mask of elements that intersect the open set ``K``-interior."""
        if K.whole:
            return np.ones(self.n_el, dtype=bool)
        hit = np.zeros(self.n_el, dtype=bool)
        for ei, lo, hi in K.pieces():
            sel = self.el_edge == ei
            x0 = self.el_x0[sel]
            x1 = x0 + self.el_h[sel]
            if hi > lo:
                hit[np.flatnonzero(sel)] |= (x1 > lo) & (x0 < hi)
        return hit

    def dofs_outside(self, K_R: RegionSpec) -> np.ndarray:
        """Indices of free DOFs whose basis support avoids the region ``K_R``."""
        hit = self.elements_meeting(K_R)
        bad_nodes = np.unique(self.node_of_el_side[hit].ravel())
        bad_nodes = bad_nodes[bad_nodes >= 0]
        return np.flatnonzero(~np.isin(self.dof_node, bad_nodes))

    def elements_outside(self, K_R: RegionSpec) -> int:
        return int((~self.elements_meeting(K_R)).sum())


def build_mesh(g: MetricGraph, trunc: TruncationPolicy, h_target: float, k: int = 1) -> Mesh:
    return Mesh(g, trunc, h_target, k)


class DiscreteField:
    """Coefficient vector over the free DOFs of a mesh.

    ``phase`` optionally holds a pointwise phase (values at quadrature points
    and at mesh nodes) applied on evaluation; it is how gauge transforms are
    represented exactly.
    """

    def __init__(self, mesh: Mesh, coeffs, phase=None):
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (mesh.n_dofs,):
            raise MeshMismatch(f"expected {mesh.n_dofs} coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise NonFiniteSample("field has non-finite coefficients")
        self.mesh = mesh
        self.coeffs = coeffs
        self.phase = phase

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.coeffs) or self.phase is not None

    def at_quad(self, m: int = 0) -> np.ndarray:
        vals = self.mesh.Q(m) @ self.coeffs
        if self.phase is not None:
            if m:
                raise NotImplementedError("derivatives of phased fields; materialize() first")
            vals = np.exp(1j * self.phase[0]) * vals
        return vals

    def at_nodes(self, j: int = 0) -> np.ndarray:
        vals = self.mesh.node_eval[j] @ self.coeffs
        if self.phase is not None:
            if j:
                raise NotImplementedError("derivatives of phased fields; materialize() first")
            vals = np.exp(1j * self.phase[1]) * vals
        return vals

    def materialize(self) -> "DiscreteField":
        """Fold the phase into nodal coefficients (value DOFs only, k = 1)."""
        if self.phase is None:
            return self
        if self.mesh.k != 1:
            raise UnsupportedOrder("phased fields are only materialized for k = 1")
        return DiscreteField(self.mesh, np.exp(1j * self.phase[2]) * self.coeffs)

    def __add__(self, other):
        _same_mesh(self, other)
        return DiscreteField(self.mesh, self.materialize().coeffs + other.materialize().coeffs)

    def __sub__(self, other):
        _same_mesh(self, other)
        return DiscreteField(self.mesh, self.materialize().coeffs - other.materialize().coeffs)

    def __mul__(self, scalar):
        return DiscreteField(self.mesh, self.coeffs * scalar, self.phase)

    __rmul__ = __mul__

    def __repr__(self):
        return f"DiscreteField(n_dofs={self.mesh.n_dofs}, complex={self.is_complex})"


def _same_mesh(a, b):
    if a.mesh is not b.mesh:
        raise MeshMismatch("fields live on different meshes")


def _fd_derivatives(f, s, delta, length, k):
    """Derivatives 1..k-1 of f at s; one-sided stencils at the edge ends."""
    out = []
    at_start = s <= 0.5 * delta
    at_end = s >= length - 0.5 * delta
    mid = ~(at_start | at_end)
    f0 = f(s)
    for j in range(1, k):
        d = np.empty_like(f0, dtype=float)
        if j == 1:
            d[mid] = (f(s[mid] + delta) - f(s[mid] - delta)) / (2 * delta)
            for sel, sg in ((at_start, 1.0), (at_end, -1.0)):
                x = s[sel]
                d[sel] = sg * (-3 * f(x) + 4 * f(x + sg * delta) - f(x + 2 * sg * delta)) / (2 * delta)
        else:
            d[mid] = (f(s[mid] + delta) - 2 * f0[mid] + f(s[mid] - delta)) / delta**2
            for sel, sg in ((at_start, 1.0), (at_end, -1.0)):
                x = s[sel]
                d[sel] = (2 * f(x) - 5 * f(x + sg * delta) + 4 * f(x + 2 * sg * delta)
                          - f(x + 3 * sg * delta)) / delta**2
        out.append(d)
    return out


def interpolate(mesh: Mesh, f, derivatives=None) -> DiscreteField:
    """Nodal Hermite interpolant of a per-edge function of arc length.

    Derivative DOFs (k >= 2) come from ``derivatives`` when given (a list of
    per-edge specs for orders 1..k-1), otherwise from finite differences at
    spacing h/10.  At vertices, even-order samples are averaged over incident
    edges and odd-order samples are projected onto the Kirchhoff constraint.
    """
    g, k = mesh.graph, mesh.k
    fs = per_edge(f, len(g.edges))
    ders = None if derivatives is None else [per_edge(d, len(g.edges)) for d in derivatives]
    coeffs = None
    samples: dict[tuple[int, int], list[np.ndarray]] = {}
    per_end: dict[tuple[int, int, int], complex] = {}

    for ei in range(len(g.edges)):
        n, h, L = mesh.edge_n[ei], mesh.edge_h[ei], mesh.edge_length[ei]
        s = np.arange(n + 1) * h
        s[-1] = L
        vals = [np.asarray(fs[ei](s))]
        if k > 1:
            if ders is not None:
                vals += [np.asarray(ders[j - 1][ei](s)) for j in range(1, k)]
            else:
                vals += _fd_derivatives(fs[ei], s, h / 10, L, k)
        for v in vals:
            if not np.all(np.isfinite(v)):
                raise NonFiniteSample(f"non-finite sample on edge {ei}")
        samples[ei] = vals
        for j in range(k):
            per_end[(ei, 0, j)] = vals[j][0]
            per_end[(ei, 1, j)] = vals[j][-1]

    dtype = np.result_type(*[v.dtype for vals in samples.values() for v in vals], float)
    coeffs = np.zeros(mesh.n_dofs, dtype=dtype)
    for v in g.vertices:
        inc = g.incident(v)
        node = mesh.vertex_node[v]
        dofs = np.flatnonzero(mesh.dof_node == node)
        for j in range(k):
            dj = dofs[mesh.dof_order[dofs] == j]
            a = np.array([per_end[(ei, end, j)] for ei, end in inc])
            if j % 2 == 0:
                coeffs[dj] = a.mean()
            else:
                sig = np.array([1.0 if end == 0 else -1.0 for _, end in inc])
                a = a - sig * (sig @ a) / len(a)
                coeffs[dj] = a[1:]
    for ei in range(len(g.edges)):
        n = mesh.edge_n[ei]
        if n < 2:
            continue
        first = mesh.edge_first[ei]
        nodes = mesh.node_of_el_side[first + 1: first + n, 0]
        for j in range(k):
            idx = np.searchsorted(mesh.dof_node, nodes)  # inner nodes own k consecutive dofs
            coeffs[idx + j] = samples[ei][j][1:n]
    return DiscreteField(mesh, coeffs)


def norms(u: DiscreteField, p: float = 2.0) -> dict:
    """L2, Lp (p in [2, inf]) and H^k-seminorm of a field by Gauss quadrature."""
    mesh = u.mesh
    if p < 2:
        raise ValueError("p must be in [2, inf]")
    w = mesh.qp_w
    a = np.abs(u.at_quad(0))
    l2 = math.sqrt(float(np.sum(w * a**2)))
    lp = float(a.max()) if math.isinf(p) else float(np.sum(w * a**p)) ** (1.0 / p)
    uk = u.materialize().at_quad(mesh.k)
    semi = math.sqrt(float(np.sum(w * np.abs(uk) ** 2)))
    return {"l2": l2, "lp": lp, "hk_semi": semi}


# -- partitions of unity ------------------------------------------------------

def _jet_mul(a, b):
    n = a.shape[0]
    out = np.zeros_like(a)
    for i in range(n):
        for j in range(n - i):
            out[i + j] += a[i] * b[j]
    return out


def _jet_pow(a, expo):
    """a**expo for a jet with nonzero constant term (truncated binomial series)."""
    n = a.shape[0]
    a0 = a[0]
    z = a / a0
    z[0] = 0.0
    out = np.zeros_like(a)
    out[0] = 1.0
    term = np.zeros_like(a)
    term[0] = 1.0
    coef = 1.0
    for m in range(1, n):
        term = _jet_mul(term, z)
        coef *= (expo - m + 1) / m
        out += coef * term
    return out * a0**expo


def _ramp(t, smooth):
    """Ramp S on [0, 1] and its t-derivatives up to order 3, clamped outside."""
    tc = np.clip(t, 0.0, 1.0)
    inside = (t > 0.0) & (t < 1.0)
    if not smooth:
        return [tc, inside * 1.0, 0 * tc, 0 * tc]
    S = 10 * tc**3 - 15 * tc**4 + 6 * tc**5
    S1 = (30 * tc**2 - 60 * tc**3 + 30 * tc**4) * inside
    S2 = (60 * tc - 180 * tc**2 + 120 * tc**3) * inside
    S3 = (60 - 360 * tc + 360 * tc**2) * inside
    return [S, S1, S2, S3]


def _slope_along_edge(g, K, ei, s, eps):
    up = distance_to_region(g, K, ei, s + eps)
    dn = distance_to_region(g, K, ei, np.maximum(s - eps, 0.0))
    width = (s + eps) - np.maximum(s - eps, 0.0)
    return (up - dn) / width


@dataclass
class UnityPair:
    """Normalised cutoff pair with ``Psi**2 + Psi_tilde**2 == 1``.

    ``psi_q`` / ``psit_q`` hold exact values and x-derivatives 0..3 at the
    quadrature points (shape (4, n_qp)); ``Psi`` / ``Psi_tilde`` are their
    Hermite interpolants on the mesh.
    """

    Psi: DiscreteField
    Psi_tilde: DiscreteField
    n: float
    psi_q: np.ndarray
    psit_q: np.ndarray
    derivative_bound: float  # n * max |Psi'|

    @property
    def unity_defect(self) -> float:
        return float(np.max(np.abs(self.psi_q[0] ** 2 + self.psit_q[0] ** 2 - 1.0)))


def _unity_jets(mesh: Mesh, K: RegionSpec, n: float, edges, s):
    g = mesh.graph
    d = mesh.distance_at(K, edges, s)
    slope = np.empty(len(s))
    for ei in np.unique(edges):
        sel = edges == ei
        slope[sel] = _slope_along_edge(g, K, int(ei), s[sel], 1e-9 * max(1.0, n))
    slope = np.round(slope)  # distance is piecewise linear with slopes in {-1, 0, 1}
    t = (d - n) / n
    S = _ramp(t, smooth=mesh.k >= 2)
    c = slope / n
    psi = np.stack([1.0 - S[0], -S[1] * c, -S[2] * c**2 / 2, -S[3] * c**3 / 6])
    one_minus = -psi.copy()
    one_minus[0] += 1.0
    q = _jet_mul(psi, psi) + _jet_mul(one_minus, one_minus)
    r = _jet_pow(q, -0.5)
    Psi = _jet_mul(psi, r)
    Psit = _jet_mul(one_minus, r)
    fact = np.array([1.0, 1.0, 2.0, 6.0])[:, None]
    # exact normalisation of the value row (jets carry derivative information)
    norm0 = np.sqrt(psi[0] ** 2 + one_minus[0] ** 2)
    Psi[0] = psi[0] / norm0
    Psit[0] = one_minus[0] / norm0
    return Psi * fact, Psit * fact


def partition_of_unity(mesh: Mesh, K: RegionSpec, n: float) -> UnityPair:
    """Normalised Lipschitz (k = 1) or quintic-ramp (k >= 2) cutoffs around ``K``.

    ``Psi`` equals 1 on the n-neighbourhood of ``K`` and vanishes outside the
    2n-neighbourhood.
    """
    g = mesh.graph
    if K.is_empty():
        raise UnboundedRegion("partition of unity needs a nonempty region")
    if not K.is_bounded(g):
        raise UnboundedRegion("partition of unity needs a bounded region")
    if n <= 0:
        raise ValueError("n must be positive")
    Pq, Ptq = _unity_jets(mesh, K, n, mesh.qp_edge, mesh.qp_s)

    def make(which):
        def val(j):
            def f(ei):
                def inner(s):
                    P, Pt = _unity_jets(mesh, K, n, np.full(len(np.atleast_1d(s)), ei),
                                        np.atleast_1d(np.asarray(s, dtype=float)))
                    return (P if which == 0 else Pt)[j]
                return inner
            return [f(ei) for ei in range(len(g.edges))]
        ders = [val(j) for j in range(1, mesh.k)] if mesh.k > 1 else None
        return interpolate(mesh, val(0), ders)

    bound = float(n * np.max(np.abs(Pq[1]))) if len(Pq[1]) else 0.0
    return UnityPair(make(0), make(1), n, Pq, Ptq, bound)


# -- columnar text ------------------------------------------------------------

def field_to_text(u: DiscreteField) -> str:
    """One row per mesh node and edge: edge, s, then Re/Im of value and derivatives."""
    edges, s = u.mesh.node_coords
    cols = [u.at_nodes(j) for j in range(u.mesh.k if u.phase is None else 1)]
    head = ["edge", "s"]
    for j in range(len(cols)):
        head += [f"d{j}_re", f"d{j}_im"]
    lines = ["# " + " ".join(head)]
    order = np.lexsort((s, edges))
    for i in order:
        row = [str(int(edges[i])), repr(float(s[i]))]
        for c in cols:
            row += [repr(float(np.real(c[i]))), repr(float(np.imag(c[i])))]
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def field_from_text(text: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse :func:`field_to_text` output into (edge, s, complex values of order 0..)."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    arr = np.array(rows, dtype=float)
    vals = arr[:, 2::2] + 1j * arr[:, 3::2]
    return arr[:, 0].astype(int), arr[:, 1], vals
