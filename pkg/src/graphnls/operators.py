"""Discrete forms, NLS energies and Euler-Lagrange residuals.

The quadratic form is

* ``int |(i d/dx + M) u|^2 + V |u|^2`` for ``k = 1`` (magnetic Schroedinger), or
* ``int |u^(k)|^2 + V |u|^2`` for the polylaplacian of order ``k``,

and the energy of a field is ``1/2 a(u, u) - mu/q int_K |u|^q`` with ``K`` the
support of the nonlinearity.  All matrices act on the free DOFs of a
:class:`~graphnls.mesh.Mesh`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import (
    ImaginaryEnergy,
    InvalidProblem,
    NonFinitePotential,
    OrderMismatch,
    ZeroField,
)
from .graph import MetricGraph, RegionSpec
from .mesh import DiscreteField, Mesh, TruncationPolicy, per_edge
from .soliton import mu_star  # noqa: F401  (re-exported)

__all__ = [
    "PotentialSpec",
    "ProblemSpec",
    "FormMatrices",
    "GroundState",
    "assemble_forms",
    "energy",
    "energy_gradient",
    "el_residual",
    "multiplier",
    "mu_star",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Electric potential ``V`` and magnetic potential ``M``.

    Each is ``None``, a number, a callable of arc length applied on every
    edge, or a per-edge list/dict of those.
    """

    V: object = None
    M: object = None

    def is_magnetic(self) -> bool:
        M = self.M
        if M is None:
            return False
        if isinstance(M, (int, float)):
            return M != 0
        if isinstance(M, (list, tuple)):
            return any(_nonzero(m) for m in M)
        if isinstance(M, dict):
            return any(_nonzero(m) for m in M.values())
        return _nonzero(M)


def _nonzero(m):
    if m is None:
        return False
    if isinstance(m, (int, float)):
        return m != 0
    return not getattr(m, "is_zero_literal", False)


@dataclass(frozen=True)
class ProblemSpec:
    """One constrained minimisation instance on a metric graph."""

    graph: MetricGraph
    trunc: TruncationPolicy = field(default_factory=TruncationPolicy)
    k: int = 1
    q: float = 4.0
    mu: float = 1.0
    c: float = 1.0
    potentials: PotentialSpec = field(default_factory=PotentialSpec)
    support: RegionSpec = field(default_factory=RegionSpec.whole_graph)

    def __post_init__(self):
        if self.k < 1:
            raise InvalidProblem("order k must be >= 1")
        if not 2 < self.q < 4 * self.k + 2:
            raise InvalidProblem(f"q={self.q} outside (2, {4 * self.k + 2})")
        if self.mu < 0:
            raise InvalidProblem("mu must be nonnegative")
        if not self.c > 0:
            raise InvalidProblem("mass c must be positive")

    @property
    def magnetic(self) -> bool:
        return self.k == 1 and self.potentials.is_magnetic()

    @property
    def localized(self) -> bool:
        return not self.support.whole

    def with_(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)


@dataclass
class FormMatrices:
    """Sparse Hermitian matrices for one problem on one mesh.

    ``A`` realises the quadratic form, ``M`` the L2 inner product, ``D`` the
    magnetic derivative at quadrature points (k = 1 only, else ``None``).
    ``Q0`` evaluates fields at quadrature points, ``w`` holds quadrature
    weights and ``wK`` the weights restricted to the nonlinearity support.
    ``keep`` lists the mesh DOFs represented (``None`` means all of them).
    ``Dk`` lets :meth:`quadratic` sum nonnegative quadrature terms instead of
    forming ``y^H A y``, whose cancellation error grows like ``h^-2k``.
    """

    mesh: Mesh
    A: sp.csr_matrix
    M: sp.csr_matrix
    D: sp.csr_matrix | None
    Q0: sp.csr_matrix
    w: np.ndarray
    wK: np.ndarray
    V_q: np.ndarray
    keep: np.ndarray | None = None
    Dk: sp.csr_matrix | None = None  # top-order (or magnetic) derivative at quadrature points

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def dtype(self):
        return self.A.dtype

    @cached_property
    def mass_lu(self):
        return splu(self.M.tocsc())

    def solve_mass(self, r):
        if np.iscomplexobj(r):
            return self.mass_lu.solve(r.real) + 1j * self.mass_lu.solve(r.imag)
        return self.mass_lu.solve(r)

    @cached_property
    def potential_lower_bound(self) -> float:
        # a(u, u) >= min V ||u||^2 since the kinetic part is nonnegative
        return float(self.V_q.min()) if len(self.V_q) else 0.0

    @cached_property
    def nonlinear_active(self) -> bool:
        touched = np.diff(self.Q0.indptr) > 0
        return bool(np.any(self.wK[touched] > 0))

    def restrict(self, keep: np.ndarray) -> "FormMatrices":
        """Forms on the subspace spanned by the listed DOFs (Dirichlet elsewhere)."""
        keep = np.asarray(keep, dtype=int)
        base = keep if self.keep is None else self.keep[keep]
        return FormMatrices(self.mesh, self.A[keep][:, keep].tocsr(), self.M[keep][:, keep].tocsr(),
                            None if self.D is None else self.D[:, keep].tocsr(),
                            self.Q0[:, keep].tocsr(), self.w, self.wK, self.V_q, base,
                            None if self.Dk is None else self.Dk[:, keep].tocsr())

    def coeffs_of(self, u) -> np.ndarray:
        if isinstance(u, DiscreteField):
            if u.mesh is not self.mesh:
                raise OrderMismatch("field and forms use different meshes")
            y = u.materialize().coeffs
            return y if self.keep is None else y[self.keep]
        y = np.asarray(u)
        if y.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}")
        return y

    def to_field(self, y: np.ndarray) -> DiscreteField:
        if self.keep is None:
            return DiscreteField(self.mesh, y)
        full = np.zeros(self.mesh.n_dofs, dtype=y.dtype)
        full[self.keep] = y
        return DiscreteField(self.mesh, full)

    def quadratic(self, y) -> float:
        """``a(y, y)``, evaluated from the factored form when available."""
        if self.Dk is None:
            return float(np.real(np.vdot(y, self.A @ y)))
        d = self.Dk @ y
        v = self.Q0 @ y
        return float(np.sum(self.w * np.abs(d) ** 2) + np.sum(self.w * self.V_q * np.abs(v) ** 2))

    def mass(self, y) -> float:
        return float(np.real(np.vdot(y, self.M @ y)))

    def mass_in(self, y, qp_mask: np.ndarray) -> float:
        vals = self.Q0 @ y
        return float(np.sum(self.w[qp_mask] * np.abs(vals[qp_mask]) ** 2))


@dataclass
class GroundState:
    u: DiscreteField
    energy: float
    lam: float
    residual: float
    iterations: int
    converged: bool
    energy_trace: list = field(default_factory=list)
    concentration_trace: list = field(default_factory=list)
    tau: float = 0.0


def _eval_on_qp(mesh: Mesh, spec) -> np.ndarray:
    fs = per_edge(spec, len(mesh.graph.edges))
    out = np.empty(len(mesh.qp_s))
    for ei, f in enumerate(fs):
        sel = mesh.qp_edge == ei
        out[sel] = np.asarray(f(mesh.qp_s[sel]), dtype=float)
    return out


def _hermitian(X: sp.spmatrix) -> sp.csr_matrix:
    X = X.tocsr()
    H = ((X + X.conj().T) * 0.5).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    return H


def assemble_forms(mesh: Mesh, prob: ProblemSpec) -> FormMatrices:
    if mesh.k != prob.k:
        raise OrderMismatch(f"mesh order {mesh.k} != problem order {prob.k}")
    V = _eval_on_qp(mesh, prob.potentials.V)
    if not np.all(np.isfinite(V)):
        raise NonFinitePotential("V is not finite at every quadrature point")
    w = mesh.qp_w
    Q0 = mesh.Q(0)
    W = sp.diags(w)
    mass = _hermitian(Q0.T @ W @ Q0)
    pot = Q0.T @ sp.diags(w * V) @ Q0
    D = None
    if prob.k == 1 and prob.potentials.is_magnetic():
        Mq = _eval_on_qp(mesh, prob.potentials.M)
        if not np.all(np.isfinite(Mq)):
            raise NonFinitePotential("M is not finite at every quadrature point")
        D = (1j * mesh.Q(1) + sp.diags(Mq) @ Q0).tocsr()
        A = _hermitian(D.conj().T @ W @ D + pot)
        Dk = D
    else:
        if prob.k >= 2 and prob.potentials.is_magnetic():
            warnings.warn("magnetic potential ignored for k >= 2", stacklevel=2)
        Qk = mesh.Q(prob.k)
        A = _hermitian(Qk.T @ W @ Qk + pot)
        Dk = Qk
    wK = w * mesh.qp_in_region(prob.support) if prob.localized else w.copy()
    return FormMatrices(mesh, A, mass, D, Q0, w, wK, V, None, Dk)


# -- energy and derivatives ---------------------------------------------------

def _nonlinear_vector(prob: ProblemSpec, forms: FormMatrices, y: np.ndarray):
    vals = forms.Q0 @ y
    a = np.abs(vals)
    dens = forms.wK * a ** (prob.q - 2)
    N = forms.Q0.conj().T @ (dens * vals)
    P = float(np.sum(forms.wK * a**prob.q))
    return N, P


def energy(prob: ProblemSpec, forms: FormMatrices, u) -> float:
    """``1/2 a(u, u) - mu/q int_K |u|^q`` for a field or coefficient vector."""
    y = forms.coeffs_of(u)
    if forms.Dk is None:
        quad = np.vdot(y, forms.A @ y)
        if abs(quad.imag) > 1e-9 * max(1.0, abs(quad.real)):
            raise ImaginaryEnergy(f"imaginary part {quad.imag:.3e} in the quadratic form")
    quad = forms.quadratic(y)
    if prob.mu == 0:
        return 0.5 * quad
    _, P = _nonlinear_vector(prob, forms, y)
    return 0.5 * quad - prob.mu / prob.q * P


def energy_gradient(prob: ProblemSpec, forms: FormMatrices, u) -> np.ndarray:
    """Vector ``g`` with ``dE(y)[d] = Re <d, g>``."""
    y = forms.coeffs_of(u)
    g = forms.A @ y
    if prob.mu:
        N, _ = _nonlinear_vector(prob, forms, y)
        g = g - prob.mu * N
    return g


def multiplier(prob: ProblemSpec, forms: FormMatrices, u) -> float:
    """Lagrange multiplier ``lam`` with ``A u + lam M u = mu N(u)`` in the Rayleigh sense."""
    y = forms.coeffs_of(u)
    m = forms.mass(y)
    if m == 0:
        raise ZeroField("multiplier of the zero field")
    num = -forms.quadratic(y)
    if prob.mu:
        N, _ = _nonlinear_vector(prob, forms, y)
        num += prob.mu * float(np.real(np.vdot(y, N)))
    return num / m


def _residual_vector(prob, forms, y, lam):
    r = forms.A @ y + lam * (forms.M @ y)
    if prob.mu:
        N, _ = _nonlinear_vector(prob, forms, y)
        r = r - prob.mu * N
    return r


def _dual_norm(forms, r) -> float:
    return math.sqrt(max(0.0, float(np.real(np.vdot(r, forms.solve_mass(r))))))


def el_residual(prob: ProblemSpec, forms: FormMatrices, u, lam: float) -> float:
    """M^-1 norm of ``A u + lam M u - mu N(u)``."""
    y = forms.coeffs_of(u)
    if not np.any(y):
        raise ZeroField("Euler-Lagrange residual of the zero field")
    return _dual_norm(forms, _residual_vector(prob, forms, y, lam))
