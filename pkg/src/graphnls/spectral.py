"""Bottom of the spectrum and the thresholds Sigma_R / Sigma.

``Sigma_R`` is the lowest Rayleigh quotient over states supported outside the
R-neighbourhood of a bounded set; it is nondecreasing in R and its limit is
the bottom of the essential spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import RegionExhaustsMesh, SolverBreakdown
from .graph import RegionSpec, neighborhood
from .mesh import DiscreteField
from .operators import FormMatrices, ProblemSpec

__all__ = ["SpectralReport", "lowest_eigenpairs", "sigma_threshold", "clusters", "extrapolate"]

DENSE_LIMIT = 400


@dataclass
class SpectralReport:
    sigma0: float
    eigenpairs: list
    sigmaR: list  # [(R, Sigma_R)]
    sigma: float
    sigma_err: float
    monotone_ok: bool
    multiplets: list = field(default_factory=list)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v * (abs(v[i]) / v[i])


def _eigs(A, M, m, shift):
    # derivative DOFs live on very different scales; equilibrate by diag(M)
    d = 1.0 / np.sqrt(M.diagonal().real)
    S = sp.diags(d)
    vals, vecs = _eigs_scaled((S @ A @ S).tocsr(), (S @ M @ S).tocsr(), m, shift)
    return vals, d[:, None] * vecs


def _eigs_scaled(A, M, m, shift):
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        # inverted pencil (M, A - shift M): the wanted eigenvalues become the
        # largest ones and the low end of the spectrum keeps full accuracy
        Md = M.toarray()
        nu, vecs = sla.eigh(Md, A.toarray() - shift * Md, subset_by_index=[n - m, n - 1])
        vals = shift + 1.0 / nu
        order = np.argsort(vals)
        return vals[order], vecs[:, order]
    # single-vector Lanczos sees repeated eigenvalues only through roundoff and
    # can skip a copy; oversampling the wanted end makes the missing copy appear
    kk = min(n - 1, m + max(8, m))
    ncv = min(n, max(2 * kk + 1, 40))
    # fixed start vector: ARPACK otherwise seeds itself randomly and results
    # differ in the last bits from run to run
    v0 = np.random.default_rng(0).standard_normal(n).astype(A.dtype)
    try:
        vals, vecs = eigsh(A, k=kk, M=M, sigma=shift, which="LM", ncv=ncv, tol=1e-13, v0=v0)
    except ArpackNoConvergence:
        # one restart with a wider Krylov space and the shift moved down
        try:
            vals, vecs = eigsh(A, k=kk, M=M, sigma=shift - 1.0, which="LM",
                               ncv=min(n, 4 * kk + 20), tol=1e-12, maxiter=20 * n, v0=v0)
        except ArpackNoConvergence as exc:
            raise SolverBreakdown(f"eigensolver failed after restart: {exc}") from None
    order = np.argsort(vals)[:m]
    return vals[order], vecs[:, order]


def _orthonormal_clusters(forms, vals, vecs):
    """M-orthonormalise eigenvectors inside (near-)degenerate clusters.

    Lanczos returns an arbitrary, not necessarily orthogonal, basis of a
    degenerate eigenspace.
    """
    vecs = vecs.copy()
    for grp in clusters(vals, 1e-8):
        if len(grp) < 2:
            continue
        V = vecs[:, grp]
        G = V.conj().T @ (forms.M @ V)
        L = np.linalg.cholesky(0.5 * (G + G.conj().T))
        vecs[:, grp] = np.linalg.solve(L.conj(), V.T).T  # V L^{-H}
    return vecs


def lowest_eigenpairs(forms: FormMatrices, m: int = 1) -> list[tuple[float, DiscreteField]]:
    """The ``m`` smallest eigenpairs of ``(A, M)`` with M-normalised eigenvectors.

    Shift-invert Lanczos around ``min V - 1``, a guaranteed lower bound of
    the spectrum, with a dense solver for small systems.
    """
    n = forms.n
    if not 1 <= m <= n:
        raise ValueError(f"m={m} must lie in 1..{n}")
    shift = min(0.0, forms.potential_lower_bound) - 1.0
    vals, vecs = _eigs(forms.A, forms.M, m, shift)
    anorm = float(abs(forms.A).sum(axis=1).max())
    vecs = _orthonormal_clusters(forms, vals, vecs)
    out = []
    for lam, v in zip(vals, vecs.T):
        v = v / math.sqrt(forms.mass(v))
        v = _fix_phase(v)
        res = np.linalg.norm(forms.A @ v - lam * (forms.M @ v))
        # roundoff in the assembled form grows like eps * |A| (h^-2k)
        floor = 1e3 * np.finfo(float).eps * anorm * np.linalg.norm(v)
        if res > 1e-8 * (abs(lam) + 1) * max(1.0, np.linalg.norm(forms.A @ v)) + floor:
            raise SolverBreakdown(f"eigenpair residual {res:.2e} too large at {lam:.6g}")
        out.append((float(lam), forms.to_field(v)))
    return out


def clusters(values, gap: float = 1e-6) -> list[list[int]]:
    """Group indices of sorted values whose neighbours differ by less than ``gap``."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and abs(v - values[groups[-1][-1]]) < gap * max(1.0, abs(v)):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def extrapolate(values) -> tuple[float, float]:
    """Aitken extrapolation of a converging sequence from its last three entries.

    The correction is only applied when successive differences shrink
    geometrically with a common sign; otherwise the last value is returned.
    The error bar is the size of the last increment (or of the correction).
    """
    v = list(values)
    if not v:
        return math.nan, math.inf
    if len(v) < 2:
        return v[-1], math.inf
    d_last = v[-1] - v[-2]
    if len(v) >= 3:
        d1, d2 = v[-2] - v[-3], d_last
        if d1 != 0 and d2 != 0 and np.sign(d1) == np.sign(d2):
            ratio = d2 / d1
            if 0 < ratio < 1:
                corr = d2 * ratio / (1 - ratio)
                return v[-1] + corr, abs(corr)
    return v[-1], abs(d_last)


def sigma_threshold(prob: ProblemSpec, forms: FormMatrices, K: RegionSpec, Rs,
                    m: int = 1) -> SpectralReport:
    """Sigma_0 and the curve R -> Sigma_R with an extrapolated Sigma."""
    Rs = list(Rs)
    if any(b < a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("radii must be ascending")
    mesh = forms.mesh
    pairs = lowest_eigenpairs(forms, m)
    sigma0 = pairs[0][0]
    curve = []
    for R in Rs:
        KR = neighborhood(mesh.graph, K, R)
        if mesh.elements_outside(KR) < 10:
            raise RegionExhaustsMesh(f"fewer than 10 elements outside K_R for R={R}")
        keep = mesh.dofs_outside(KR)
        sub = forms.restrict(keep)
        curve.append((R, lowest_eigenpairs(sub, 1)[0][0]))
    vals = [s for _, s in curve]
    sigma, err = extrapolate(vals)
    monotone = all(b >= a - 1e-8 * (1 + abs(a)) for a, b in zip(vals, vals[1:]))
    groups = [g for g in clusters([p[0] for p in pairs]) if len(g) > 1]
    return SpectralReport(sigma0, pairs, curve, sigma, err, monotone, groups)
