"""Constrained ground states, energy curves, ionization thresholds and existence verdicts.

The minimiser of ``E(u) = 1/2 a(u, u) - mu/q int_K |u|^q`` on the sphere
``||u||^2 = c`` is computed by a normalized gradient flow: the linear part is
treated implicitly, the nonlinearity explicitly, and every step is projected
back to the mass sphere.  Existence of a minimiser is decided by comparing
``E_c`` with the ionization threshold, the infimum over states living outside
ever larger neighbourhoods of a bounded set.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import splu

from .errors import DivergedEnergy, InvalidProblem, MaxIterations, RegionExhaustsMesh
from .graph import RegionSpec, core_region, distance_to_region, neighborhood
from .mesh import DiscreteField, interpolate
from .operators import (
    FormMatrices,
    GroundState,
    ProblemSpec,
    _dual_norm,
    _nonlinear_vector,
    _residual_vector,
    energy,
    multiplier,
)
from .soliton import mu_star, soliton_oracle
from .spectral import lowest_eigenpairs, sigma_threshold

__all__ = [
    "FlowOptions",
    "ground_state",
    "EnergyCurve",
    "energy_curve",
    "ThresholdCurve",
    "ionization_threshold",
    "ExistenceReport",
    "existence_check",
    "VANISHING_FRACTION",
]

VANISHING_FRACTION = 0.05
DIVERGENCE_LEVEL = -1e12
INITIALIZERS = ("gaussian", "eigen", "field")


@dataclass(frozen=True)
class FlowOptions:
    """Parameters of the normalized gradient flow.

    ``tau=None`` selects ``0.1 / (1 + |Sigma_0|)``.  The step adapts: it is
    halved whenever the energy would rise and doubled after a run of accepted
    steps, up to ``tau_max``.
    """

    tau: float | None = None
    max_iter: int = 20000
    energy_tol: float = 1e-12
    residual_tol: float = 1e-8
    init: str = "gaussian"
    init_field: DiscreteField | None = None
    seed: int = 0
    n_starts: int = 1
    tau_max: float = 1e4
    trace_every: int = 10

    def __post_init__(self):
        if self.tau is not None and not self.tau > 0:
            raise InvalidProblem("tau must be positive")
        if not (self.energy_tol > 0 and self.residual_tol > 0):
            raise InvalidProblem("tolerances must be positive")
        if self.init not in INITIALIZERS:
            raise InvalidProblem(f"unknown initializer {self.init!r}")
        if self.init == "field" and self.init_field is None:
            raise InvalidProblem("init='field' needs init_field")
        if self.max_iter < 1 or self.n_starts < 1:
            raise InvalidProblem("max_iter and n_starts must be positive")


# -- initial data --------------------------------------------------------------

def _bump_center(prob: ProblemSpec, forms: FormMatrices):
    """(edge, s) of the default bump: the nonlinearity support, the bottom of V or a core vertex."""
    g, mesh = prob.graph, forms.mesh
    if prob.localized:
        pieces = prob.support.normalized(g).pieces()
        if pieces:
            ei, lo, hi = pieces[0]
            return ei, 0.5 * (lo + hi)
    V = forms.V_q
    if len(V) and V.max() - V.min() > 1e-12:
        i = int(np.argmin(V))
        return int(mesh.qp_edge[i]), float(mesh.qp_s[i])
    v = g.vertices[0]
    ei, end = g.incident(v)[0]
    return ei, 0.0 if end == 0 else g.edges[ei].length


def _bump(prob: ProblemSpec, forms: FormMatrices, ei: int, s0: float, width: float) -> np.ndarray:
    g, mesh = prob.graph, forms.mesh
    point = RegionSpec.from_intervals(g, [(ei, s0, s0)])

    def on_edge(e):
        return lambda s: np.exp(-0.5 * (distance_to_region(g, point, e, np.atleast_1d(s)) / width) ** 2)

    u = interpolate(mesh, [on_edge(e) for e in range(len(g.edges))])
    return forms.coeffs_of(u).astype(forms.dtype)


def _random_center(prob: ProblemSpec, forms: FormMatrices, rng: np.random.Generator):
    """A random point of the bounded part, or a random represented node for restricted forms."""
    g, mesh = prob.graph, forms.mesh
    if forms.keep is not None:
        nodes = np.unique(mesh.dof_node[forms.keep])
        pe, ps = mesh.node_position
        i = int(rng.choice(nodes))
        return int(pe[i]), float(ps[i])
    ei = int(rng.integers(len(g.edges)))
    e = g.edges[ei]
    span = min(prob.trunc.length, 10.0) if e.is_ray else e.length
    return ei, float(rng.uniform(0.0, span))


def _initial_vectors(prob, forms, opts: FlowOptions) -> list[np.ndarray]:
    if opts.init == "field":
        return [forms.coeffs_of(opts.init_field).astype(np.result_type(forms.dtype, opts.init_field.coeffs))]
    out = []
    if opts.init == "eigen" or forms.keep is not None:
        out.append(forms.coeffs_of(lowest_eigenpairs(forms, 1)[0][1]))
    else:
        out.append(_bump(prob, forms, *_bump_center(prob, forms), 1.0))
    rng = np.random.default_rng(opts.seed)
    while len(out) < opts.n_starts:
        ei, s0 = _random_center(prob, forms, rng)
        y = _bump(prob, forms, ei, s0, float(rng.uniform(0.2, 2.0)))
        if forms.mass(y) < 1e-8:
            y = out[0] + 0.1 * rng.standard_normal(forms.n) * np.abs(out[0]).max()
        out.append(y)
    return out


# -- the flow ------------------------------------------------------------------

def _normalize(forms, y, c):
    m = forms.mass(y)
    if not m > 0:
        raise InvalidProblem("initial field has zero mass on the represented DOFs")
    return y * math.sqrt(c / m)


def _phase_fix(y: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(y)))
    y = y * (abs(y[i]) / y[i])
    if np.iscomplexobj(y) and np.allclose(y.imag, 0.0, atol=1e-14 * abs(y[i])):
        y = y.real.copy()
    return y


class _Stepper:
    """Factorised ``M + tau (A - s M)`` for the current step size and shift.

    The shift tracks ``-lam`` so that ``A - s M`` is the linear part of the
    Euler-Lagrange operator, clamped below ``Sigma_0`` to stay positive definite.
    """

    def __init__(self, forms, sigma0):
        self.forms = forms
        self.cap = sigma0 - 1e-3 * (1.0 + abs(sigma0))
        self.key = None
        self.lu = None

    def shift_for(self, lam):
        return min(-lam, self.cap)

    def solve(self, tau, shift, rhs):
        key = self.key
        if key is None or tau != key[0] or abs(shift - key[1]) > 0.05 * abs(key[1]) + 1e-12:
            f = self.forms
            self.lu = splu((f.M + tau * (f.A - shift * f.M)).tocsc())
            self.key = (tau, shift)
        if np.iscomplexobj(rhs) and not np.iscomplexobj(self.forms.A):
            return self.lu.solve(rhs.real) + 1j * self.lu.solve(rhs.imag)
        return self.lu.solve(rhs)


def _linear_ground_state(prob, forms, trace_mask):
    sigma0, u = lowest_eigenpairs(forms, 1)[0]
    y = _phase_fix(forms.coeffs_of(u) * math.sqrt(prob.c))
    lam = -sigma0
    res = _dual_norm(forms, _residual_vector(prob, forms, y, lam))
    e = energy(prob, forms, y)
    trace = [] if trace_mask is None else [(0, forms.mass_in(y, trace_mask))]
    return GroundState(forms.to_field(y), e, lam, res, 0, True, [e], trace, 0.0)


def _flow(prob, forms, y, opts, tau0, sigma0, trace_mask):
    c, mu = prob.c, prob.mu
    stepper = _Stepper(forms, sigma0)
    y = _normalize(forms, y, c)
    E = energy(prob, forms, y)
    trace_E = [E]
    trace_c = [] if trace_mask is None else [(0, forms.mass_in(y, trace_mask))]
    tau, streak = tau0, 0
    converged = False
    res = math.inf
    it = 0
    lam = 0.0
    for it in range(1, opts.max_iter + 1):
        N, _ = _nonlinear_vector(prob, forms, y)
        My = forms.M @ y
        lam = (mu * float(np.real(np.vdot(y, N))) - forms.quadratic(y)) / c
        r = forms.A @ y + lam * My - mu * N
        res = _dual_norm(forms, r)
        shift = stepper.shift_for(lam)
        while True:
            y_new = _normalize(forms, y - tau * stepper.solve(tau, shift, r), c)
            E_new = energy(prob, forms, y_new)
            if E_new <= E + 1e-12:
                break
            tau *= 0.5
            streak = 0
            if tau < 1e-14:
                raise DivergedEnergy("step size collapsed without energy decrease")
        if E_new < DIVERGENCE_LEVEL:
            raise DivergedEnergy(f"energy {E_new:.3e} below {DIVERGENCE_LEVEL:.0e}")
        drop = E - E_new
        y, E = y_new, E_new
        trace_E.append(E)
        if trace_mask is not None and it % opts.trace_every == 0:
            trace_c.append((it, forms.mass_in(y, trace_mask)))
        streak += 1
        if streak >= 5 and tau < opts.tau_max:
            tau = min(2 * tau, opts.tau_max)
            streak = 0
        if drop < opts.energy_tol and res < opts.residual_tol:
            converged = True
            break
    lam = multiplier(prob, forms, y)
    res = _dual_norm(forms, _residual_vector(prob, forms, y, lam))
    converged = converged or (res < opts.residual_tol)
    y = _phase_fix(y)
    if trace_mask is not None and (not trace_c or trace_c[-1][0] != it):
        trace_c.append((it, forms.mass_in(y, trace_mask)))
    return GroundState(forms.to_field(y), E, lam, res, it, converged, trace_E, trace_c, tau)


def ground_state(prob: ProblemSpec, forms: FormMatrices, opts: FlowOptions | None = None,
                 trace_region: RegionSpec | None = None) -> GroundState:
    """Minimise the energy on the mass sphere ``||u||^2 = prob.c``.

    When the nonlinearity does not act on the represented DOFs (``mu = 0`` or
    a support outside them) the answer is the scaled lowest eigenvector.
    On ``MaxIterations`` the best iterate is returned with ``converged=False``
    and a warning.
    """
    opts = opts or FlowOptions()
    mask = None if trace_region is None else forms.mesh.qp_in_region(trace_region)
    if prob.mu == 0 or not forms.nonlinear_active:
        return _linear_ground_state(prob, forms, mask)
    sigma0 = lowest_eigenpairs(forms, 1)[0][0]
    tau0 = 0.1 / (1.0 + abs(sigma0)) if opts.tau is None else opts.tau
    best = None
    for y0 in _initial_vectors(prob, forms, opts):
        gs = _flow(prob, forms, y0, opts, tau0, sigma0, mask)
        if best is None or gs.energy < best.energy:
            best = gs
    if not best.converged:
        warnings.warn(str(MaxIterations(f"flow stopped after {best.iterations} iterations, "
                                        f"residual {best.residual:.2e}")), stacklevel=2)
    return best


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# -- energy curve ----------------------------------------------------------------

@dataclass
class EnergyCurve:
    samples: list  # [(t, E_t)]
    rescaled: list  # [(t, t * inf of the rescaled unit-mass functional)]
    rescaling_gap: float
    concavity_defects: list  # [(t_lo, t_mid, t_hi, defect)]
    subadditivity: list  # [(t1, t2, E_{t1+t2} - E_t1 - E_t2)]
    states: list = field(default_factory=list, repr=False)

    @property
    def max_concavity_defect(self) -> float:
        return max((d for *_, d in self.concavity_defects), default=0.0)


def energy_curve(prob: ProblemSpec, forms: FormMatrices, ts, opts: FlowOptions | None = None,
                 workers: int = 1) -> EnergyCurve:
    """Sample ``t -> E_t`` and report concavity and subadditivity.

    The rescaled cross-check uses ``E_t = t * inf_{||v||=1} 1/2 a(v) - mu t^((q-2)/2)/q int |v|^q``.
    """
    ts = [float(t) for t in ts]
    if not ts:
        raise ValueError("no masses given")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("masses must be strictly ascending")
    if ts[0] <= 0 or ts[-1] > prob.c * (1 + 1e-12):
        raise ValueError("masses must lie in (0, c]")
    opts = opts or FlowOptions()
    states = _map(lambda t: ground_state(prob.with_(c=t), forms, opts), ts, workers)
    E = [s.energy for s in states]
    expo = (prob.q - 2.0) / 2.0
    scaled = _map(lambda t: t * ground_state(prob.with_(c=1.0, mu=prob.mu * t**expo), forms, opts).energy,
                  ts, workers)
    gap = max(abs(a - b) for a, b in zip(E, scaled))
    conc = []
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            for l in range(j + 1, len(ts)):
                th = (ts[j] - ts[i]) / (ts[l] - ts[i])
                chord = (1 - th) * E[i] + th * E[l]
                conc.append((ts[i], ts[j], ts[l], max(0.0, chord - E[j])))
    sub = []
    scale = max(1.0, max(ts))
    for i, t1 in enumerate(ts):
        for t2 in ts[i:]:
            for l, t in enumerate(ts):
                if abs(t - (t1 + t2)) <= 1e-12 * scale:
                    sub.append((t1, t2, E[l] - E[i] - E[ts.index(t2)]))
    return EnergyCurve(list(zip(ts, E)), list(zip(ts, scaled)), gap, conc, sub, states)


# -- ionization threshold --------------------------------------------------------

@dataclass
class ThresholdCurve:
    curve: list  # [(R, value)]
    estimate: float
    error: float
    reference: float | None  # soliton energy on the line when the decaying-potential equality applies
    states: list = field(default_factory=list, repr=False)


def _restricted_forms(forms: FormMatrices, K: RegionSpec, R: float) -> FormMatrices:
    mesh = forms.mesh
    KR = neighborhood(mesh.graph, K, R)
    if mesh.elements_outside(KR) < 10:
        raise RegionExhaustsMesh(f"fewer than 10 elements outside K_R for R={R}")
    return forms.restrict(mesh.dofs_outside(KR))


def ionization_threshold(prob: ProblemSpec, forms: FormMatrices, K: RegionSpec, Rs,
                         opts: FlowOptions | None = None, workers: int = 1) -> ThresholdCurve:
    """Constrained infima over states supported outside ``K_R`` for each ``R``.

    The estimate is the value at the largest radius; the error bar is the
    change over the last two radii.
    """
    Rs = [float(R) for R in Rs]
    if not Rs:
        raise ValueError("no radii given")
    if any(b < a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("radii must be ascending")
    # restricted pieces are intervals where the lowest eigenvector already sits
    # at the symmetric centre; random bumps only add slow translational drift
    opts = replace(opts or FlowOptions(), n_starts=1, init="eigen")
    subs = [_restricted_forms(forms, K, R) for R in Rs]
    states = _map(lambda f: ground_state(prob, f, opts), subs, workers)
    curve = [(R, s.energy) for R, s in zip(Rs, states)]
    est = curve[-1][1]
    err = abs(curve[-1][1] - curve[-2][1]) if len(curve) > 1 else math.inf
    ref = None
    if (prob.graph.rays and prob.k == 1 and prob.q < 6 and prob.mu > 0
            and not prob.localized and not prob.magnetic):
        ref = soliton_oracle(prob.q, prob.mu, prob.c).energy
    return ThresholdCurve(curve, est, err, ref, states)


# -- existence verdict -----------------------------------------------------------

VERDICTS = ("minimizer_found", "criterion_holds", "criterion_fails", "inconclusive")


@dataclass
class ExistenceReport:
    E_c: float
    tildeE_curve: list
    tildeE: float
    sigma0: float
    sigma: float
    subadditivity_samples: list
    concentration_trace: list
    verdict: str
    margin: float = 0.0
    tildeE_error: float = 0.0
    tildeE_reference: float | None = None
    small_mu_condition: bool | None = None
    mu_star: float | None = None
    vanishing: bool = False
    ground_state: GroundState | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "E_c": self.E_c,
            "tildeE": self.tildeE,
            "tildeE_error": self.tildeE_error,
            "tildeE_reference": self.tildeE_reference,
            "sigma0": self.sigma0,
            "sigma": self.sigma,
            "margin": self.margin,
            "small_mu_condition": self.small_mu_condition,
            "mu_star": self.mu_star,
            "vanishing": self.vanishing,
            "verdict": self.verdict,
        }


def default_radii(prob: ProblemSpec) -> list[float]:
    L = prob.trunc.length
    return [L / 8, L / 4, L / 2]


def existence_check(prob: ProblemSpec, forms: FormMatrices, K: RegionSpec | None = None,
                    Rs=None, opts: FlowOptions | None = None, conc_R: float = 5.0,
                    subadditivity_ts=None, workers: int = 1) -> ExistenceReport:
    """Compare ``E_c`` with the ionization threshold and classify the outcome.

    ``criterion_holds`` means ``E_c < tildeE - margin`` with margin three times
    the combined solver tolerance and threshold error bar.  A minimiser whose
    mass inside ``K_{conc_R}`` drops below 5% of ``c`` is flagged vanishing.
    """
    g = prob.graph
    opts = opts or FlowOptions(n_starts=3)
    if K is None:
        K = core_region(g) if not g.is_compact else RegionSpec.whole_graph()
    if g.is_compact:
        gs = ground_state(prob, forms, opts)
        pairs = lowest_eigenpairs(forms, 1)
        sub = _subadditivity(prob, forms, opts, subadditivity_ts, workers)
        return ExistenceReport(gs.energy, [], math.inf, pairs[0][0], math.inf, sub,
                               gs.concentration_trace, "minimizer_found", 0.0, 0.0, None,
                               None, None, False, gs)
    Rs = default_radii(prob) if Rs is None else list(Rs)
    trace_region = neighborhood(g, K, conc_R)
    gs = ground_state(prob, forms, opts, trace_region=trace_region)
    thr = ionization_threshold(prob, forms, K, Rs, opts, workers)
    spec = sigma_threshold(prob, forms, K, Rs)
    tol = opts.energy_tol + opts.residual_tol * math.sqrt(prob.c)
    err = thr.error if math.isfinite(thr.error) else 0.0
    margin = 3.0 * (tol + err)
    if gs.energy < thr.estimate - margin:
        verdict = "criterion_holds"
    elif abs(gs.energy - thr.estimate) < margin:
        verdict = "inconclusive"
    else:
        verdict = "criterion_fails"
    final_mass = gs.concentration_trace[-1][1] if gs.concentration_trace else prob.c
    vanishing = final_mass < VANISHING_FRACTION * prob.c
    if vanishing and verdict == "inconclusive":
        verdict = "criterion_fails"
    small = spec.sigma0 < spec.sigma - spec.sigma_err
    mstar = None
    if prob.q < 6 and spec.sigma0 < 0 and prob.k == 1:
        mstar = mu_star(spec.sigma0, prob.q)
    sub = _subadditivity(prob, forms, opts, subadditivity_ts, workers)
    return ExistenceReport(gs.energy, thr.curve, thr.estimate, spec.sigma0, spec.sigma, sub,
                           gs.concentration_trace, verdict, margin, thr.error, thr.reference,
                           small, mstar, vanishing, gs)


def _subadditivity(prob, forms, opts, ts, workers):
    if ts is None:
        ts = [prob.c / 2, prob.c]
    single = replace(opts, n_starts=1)
    return energy_curve(prob, forms, ts, single, workers).subadditivity
