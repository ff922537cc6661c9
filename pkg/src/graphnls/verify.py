"""Numerical checks of functional inequalities and localisation identities.

* Gagliardo-Nirenberg: ``||u||_p^p <= C ||(i d/dx + M) u||^((p-2)/2) ||u||^((p+2)/2)``
  for k = 1, and ``||u||_p^p <= C ||u^(k)||^((p-2)/2k) ||u||^(((2k-1)p+2)/2k)``
  for the H^k version.  Constants are fitted over a corpus, not asserted.
* Sobolev: ``||u||_inf <= C (a(u, u) + ||u||^2)^(1/2)`` with V = 0.
* IMS: ``a(fu, fu) = 1/2 (a(u, f^2 u) + a(f^2 u, u)) + <C_f u, u>`` with
  ``C_f = |f'|^2`` for k = 1 and
  ``C_f u = -6 f'^2 u'' - 12 f' f'' u' - (4 f' f''' + 3 f''^2) u`` for k = 2
  (the double commutator ``-1/2 [f, [f, A]]``).  The discrete defect is
  measured with products formed on nodal Hermite data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CompactGraphUnsupported, UnsupportedOrder, ZeroField
from .graph import RegionSpec, core_region, distance_to_region
from .mesh import DiscreteField, Mesh, build_mesh, interpolate, partition_of_unity, per_edge
from .operators import FormMatrices, ProblemSpec, assemble_forms
from .soliton import SolitonSolution, gamma_q, soliton_oracle

__all__ = [
    "InequalityReport",
    "check_gn",
    "check_sobolev",
    "random_bump_corpus",
    "IMSReport",
    "check_ims",
    "ims_convergence",
    "ConvergenceReport",
    "observed_order",
    "soliton_field",
    "field_product",
    "soliton_oracle",
    "SolitonSolution",
    "gamma_q",
]


@dataclass
class InequalityReport:
    corpus_size: int
    max_ratio: float
    fitted_constant: float
    violations: list = field(default_factory=list)  # [{"index", "ratio", "bound"}]
    ratios: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return not self.violations and math.isfinite(self.max_ratio)


def random_bump_corpus(mesh: Mesh, n: int, seed: int = 0, complex_phase: bool = False,
                       widths=(0.2, 2.0)) -> list[DiscreteField]:
    """Gaussian bumps with random centres on the bounded part and random widths.

    With ``complex_phase`` each bump is multiplied by a random global phase.
    """
    g = mesh.graph
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        ei = int(rng.integers(len(g.edges)))
        e = g.edges[ei]
        span = min(10.0, 0.25 * mesh.trunc.length) if e.is_ray else e.length
        s0 = float(rng.uniform(0.0, span))
        w = float(rng.uniform(*widths))
        point = RegionSpec.from_intervals(g, [(ei, s0, s0)])

        def on_edge(j, point=point, w=w):
            return lambda s: np.exp(-0.5 * (distance_to_region(g, point, j, np.atleast_1d(s)) / w) ** 2)

        u = interpolate(mesh, [on_edge(j) for j in range(len(g.edges))])
        if complex_phase:
            u = DiscreteField(mesh, u.coeffs * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        out.append(u)
    return out


def _magnetic_at_quad(mesh: Mesh, M) -> np.ndarray:
    out = np.zeros(len(mesh.qp_s))
    for ei, f in enumerate(per_edge(M, len(mesh.graph.edges))):
        sel = mesh.qp_edge == ei
        out[sel] = f(mesh.qp_s[sel])
    return out


def _report(ratios, constant, tol):
    ratios = np.asarray(ratios, dtype=float)
    bad = ~np.isfinite(ratios)
    mx = float(ratios[~bad].max()) if np.any(~bad) else math.inf
    fitted = mx if constant is None else float(constant)
    viol = [{"index": int(i), "ratio": float(r), "bound": fitted}
            for i, r in enumerate(ratios) if not np.isfinite(r) or r > fitted * (1 + tol)]
    return InequalityReport(len(ratios), mx if not bad.any() else math.inf, fitted, viol, list(ratios))


def check_gn(mesh: Mesh, M, corpus, p: float = 4.0, constant: float | None = None,
             tol: float = 1e-12) -> InequalityReport:
    """Gagliardo-Nirenberg ratios over a corpus.

    For ``mesh.k == 1`` the magnetic derivative with potential ``M`` is used;
    for ``k >= 2`` the H^k-seminorm version (``M`` ignored).  The fitted
    constant is the largest ratio unless ``constant`` is given, in which case
    ratios above it are reported as violations.
    """
    if mesh.graph.is_compact:
        raise CompactGraphUnsupported("the GN inequality as stated needs a graph with a ray")
    if p <= 2:
        raise ValueError("p must exceed 2")
    k = mesh.k
    w = mesh.qp_w
    Mq = _magnetic_at_quad(mesh, M) if k == 1 else None
    ratios = []
    for u in corpus:
        u = u.materialize()
        v = u.at_quad(0)
        l2 = math.sqrt(float(np.sum(w * np.abs(v) ** 2)))
        if l2 == 0:
            raise ZeroField("corpus contains the zero field")
        lp = float(np.sum(w * np.abs(v) ** p))
        if k == 1:
            d = 1j * u.at_quad(1) + Mq * v
            dn = math.sqrt(float(np.sum(w * np.abs(d) ** 2)))
            rhs = dn ** ((p - 2) / 2) * l2 ** ((p + 2) / 2)
        else:
            dn = math.sqrt(float(np.sum(w * np.abs(u.at_quad(k)) ** 2)))
            rhs = dn ** ((p - 2) / (2 * k)) * l2 ** (((2 * k - 1) * p + 2) / (2 * k))
        ratios.append(lp / rhs if rhs > 0 else math.inf)
    return _report(ratios, constant, tol)


def check_sobolev(mesh: Mesh, M, corpus, constant: float | None = None,
                  tol: float = 1e-12) -> InequalityReport:
    """Ratios ``||u||_inf / (a(u, u) + ||u||^2)^(1/2)`` with ``V = 0``.

    Works on compact graphs as well; the ``||u||^2`` term handles constants.
    """
    w = mesh.qp_w
    k = mesh.k
    Mq = _magnetic_at_quad(mesh, M) if k == 1 else None
    ratios = []
    for u in corpus:
        u = u.materialize()
        v = u.at_quad(0)
        l2sq = float(np.sum(w * np.abs(v) ** 2))
        if l2sq == 0:
            raise ZeroField("corpus contains the zero field")
        d = 1j * u.at_quad(1) + Mq * v if k == 1 else u.at_quad(k)
        a = float(np.sum(w * np.abs(d) ** 2))
        sup = max(float(np.abs(v).max()), float(np.abs(u.at_nodes(0)).max()))
        ratios.append(sup / math.sqrt(a + l2sq))
    return _report(ratios, constant, tol)


# -- IMS -----------------------------------------------------------------------

def _representatives(mesh: Mesh) -> np.ndarray:
    """For every free DOF a broken row of ``P`` that reproduces it exactly."""
    P = mesh.P.tocsr()
    rep = np.full(P.shape[1], -1)
    counts = np.diff(P.indptr)
    for r in np.flatnonzero(counts == 1):
        c = P.indices[P.indptr[r]]
        if rep[c] < 0 and P.data[P.indptr[r]] == 1.0:
            rep[c] = r
    if np.any(rep < 0):
        raise RuntimeError("constraint basis has a free DOF without a representative row")
    return rep


def field_product(f: DiscreteField, u: DiscreteField) -> DiscreteField:
    """Hermite field whose nodal data are the Leibniz products of ``f`` and ``u``.

    Products are formed element end by element end on the broken data, which
    keeps Kirchhoff conditions when both factors satisfy them.
    """
    mesh = u.mesh
    if f.mesh is not mesh:
        raise ValueError("factors live on different meshes")
    k = mesh.k
    bf = (mesh.P @ f.materialize().coeffs).reshape(mesh.n_el, 2, k)
    bu = (mesh.P @ u.materialize().coeffs).reshape(mesh.n_el, 2, k)
    prod = np.zeros(np.broadcast_shapes(bf.shape, bu.shape), dtype=np.result_type(bf, bu))
    for j in range(k):
        for i in range(j + 1):
            prod[..., j] += math.comb(j, i) * bf[..., i] * bu[..., j - i]
    rep = _representatives(mesh)
    return DiscreteField(mesh, prod.ravel()[rep])


@dataclass
class IMSReport:
    defects: list
    max_defect: float


def _cutoff(mesh: Mesh, K: RegionSpec | None, n: float | None):
    """Nodal field f and exact jets (4, n_qp) of f; ``n=None`` gives f = 1."""
    if n is None:
        ones = np.zeros(mesh.n_dofs)
        ones[mesh.dof_order == 0] = 1.0
        jets = np.zeros((4, len(mesh.qp_s)))
        jets[0] = 1.0
        return DiscreteField(mesh, ones), jets
    K = core_region(mesh.graph) if K is None else K
    pair = partition_of_unity(mesh, K, n)
    return pair.Psi, pair.psi_q


def _ims_defect(forms: FormMatrices, f: DiscreteField, jets: np.ndarray, u: DiscreteField) -> float:
    mesh = forms.mesh
    k = mesh.k
    fu = field_product(f, u).coeffs
    f2u = field_product(f, field_product(f, u)).coeffs
    y = u.materialize().coeffs
    A = forms.A
    lhs = np.vdot(fu, A @ fu)
    mid = 0.5 * (np.vdot(y, A @ f2u) + np.vdot(f2u, A @ y))
    w = mesh.qp_w
    v0 = mesh.Q(0) @ y
    f1, f2, f3 = jets[1], jets[2], jets[3]
    if k == 1:
        corr = np.sum(w * f1**2 * np.abs(v0) ** 2)
    else:
        v1 = mesh.Q(1) @ y
        v2 = mesh.Q(2) @ y
        Cu = -6 * f1**2 * v2 - 12 * f1 * f2 * v1 - (4 * f1 * f3 + 3 * f2**2) * v0
        corr = np.sum(w * Cu * np.conj(v0))
    return float(abs(np.real(lhs - mid - corr)))


def check_ims(mesh: Mesh, prob: ProblemSpec, n: float | None, corpus, K: RegionSpec | None = None,
              forms: FormMatrices | None = None) -> IMSReport:
    """Discrete IMS defect per corpus element for the cutoff ``Psi`` at scale ``n``.

    ``n=None`` uses ``f = 1``, for which the defect vanishes identically.
    """
    if mesh.k > 2:
        raise UnsupportedOrder("identity checking is implemented for k = 1 and k = 2")
    if prob.k != mesh.k:
        raise UnsupportedOrder("problem and mesh orders differ")
    forms = forms or assemble_forms(mesh, prob)
    f, jets = _cutoff(mesh, K, n)
    defects = [_ims_defect(forms, f, jets, u) for u in corpus]
    return IMSReport(defects, max(defects, default=0.0))


@dataclass
class ConvergenceReport:
    hs: list
    errors: list
    orders: list  # pairwise observed orders
    order: float  # least-squares slope of log error against log h


def observed_order(hs, errors) -> ConvergenceReport:
    hs = list(map(float, hs))
    errors = list(map(float, errors))
    orders = [math.log(e0 / e1) / math.log(h0 / h1)
              for (h0, e0), (h1, e1) in zip(zip(hs, errors), zip(hs[1:], errors[1:]))]
    slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    return ConvergenceReport(hs, errors, orders, slope)


def ims_convergence(prob: ProblemSpec, hs, n: float, profile, derivatives=None,
                    K: RegionSpec | None = None) -> ConvergenceReport:
    """IMS defect of one field (given as per-edge callables) under mesh refinement."""
    errs = []
    for h in hs:
        mesh = build_mesh(prob.graph, prob.trunc, h, prob.k)
        u = interpolate(mesh, profile, derivatives)
        errs.append(check_ims(mesh, prob, n, [u], K).max_defect)
    return observed_order(hs, errs)


def soliton_field(mesh: Mesh, sol: SolitonSolution) -> DiscreteField:
    """Hermite interpolant of the line soliton centred at the vertex of a two-ray graph.

    Rays run away from the centre, so the profile is ``u(s)`` on each of them.
    """
    k = mesh.k
    ders = [(lambda s, j=j: sol.profile_derivative(s, j)) for j in range(1, k)] if k > 1 else None
    return interpolate(mesh, sol.profile, ders)

