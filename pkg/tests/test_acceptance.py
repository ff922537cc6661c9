"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (visible in
``pytest -v`` output) and then asserts.  Reference values come from closed
forms or from independent scalar root finding, never from the package.

Run standalone with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys

import numpy as np
import pytest
from scipy.optimize import brentq

from graphnls import (
    FlowOptions,
    PotentialSpec,
    ProblemSpec,
    TruncationPolicy,
    assemble_forms,
    build_mesh,
    clusters,
    core_region,
    energy_curve,
    existence_check,
    gamma_q,
    ground_state,
    interval_graph,
    lowest_eigenpairs,
    mu_star,
    real_line,
    sigma_threshold,
    spectral_invariance,
    star_graph,
)
from graphnls.verify import check_gn, check_ims, observed_order, random_bump_corpus, soliton_field

from oracles import reference_eval, random_expression, star_secular_roots, square_well_ground

_LINES: list[str] = []


@pytest.fixture
def report(capsys):
    def emit(n: int, checks: dict):
        ok = all(bool(v[0]) for v in checks.values())
        detail = "; ".join(f"{k}: {v[1]}" for k, v in checks.items())
        line = f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'} | {detail}"
        _LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        failed = [k for k, v in checks.items() if not v[0]]
        assert ok, f"criterion {n} failed: {failed}"

    return emit


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# 1 --------------------------------------------------------------------------

def test_01_interval_spectrum(report):
    g = interval_graph(math.pi)
    prob = ProblemSpec(g)
    mesh = build_mesh(g, prob.trunc, math.pi / 1000, 1)
    vals = [lam for lam, _ in lowest_eigenpairs(assemble_forms(mesh, prob), 4)]
    exact = [0.0, 1.0, 4.0, 9.0]
    errs = [abs(v) if e == 0 else _rel(v, e) for v, e in zip(vals, exact)]
    report(1, {"eigenvalues": (max(errs) <= 1e-3, f"{np.round(vals, 6).tolist()} max err {max(errs):.2e}")})


# 2 --------------------------------------------------------------------------

def test_02_star_spectrum(report):
    g = star_graph(3, 1.0)
    prob = ProblemSpec(g)
    mesh = build_mesh(g, prob.trunc, 1e-3, 1)
    vals = [lam for lam, _ in lowest_eigenpairs(assemble_forms(mesh, prob), 4)]
    exact = star_secular_roots([1.0, 1.0, 1.0], 4)
    errs = [abs(v) if e == 0 else _rel(v, e) for v, e in zip(vals, exact)]
    groups = clusters(vals, 1e-6)
    report(2, {
        "eigenvalues": (max(errs) <= 1e-3, f"{np.round(vals, 5).tolist()} vs {np.round(exact, 5).tolist()}"),
        "degenerate pair": ([1, 2] in groups, f"clusters {groups}"),
    })


# 3 --------------------------------------------------------------------------

def test_03_beam_spectrum(report):
    g = interval_graph(math.pi)
    prob = ProblemSpec(g, k=2)
    mesh = build_mesh(g, prob.trunc, math.pi / 100, 2)
    vals = [lam for lam, _ in lowest_eigenpairs(assemble_forms(mesh, prob), 4)]
    exact = [0.0, 1.0, 16.0, 81.0]
    errs = [abs(v) if e == 0 else _rel(v, e) for v, e in zip(vals, exact)]
    report(3, {"eigenvalues": (max(errs) <= 1e-2, f"{np.round(vals, 6).tolist()} max err {max(errs):.2e}")})


# 4 --------------------------------------------------------------------------

def test_04_soliton(report):
    g = real_line()
    trunc = TruncationPolicy(40.0)
    prob = ProblemSpec(g, trunc, q=4.0, mu=1.0, c=1.0)
    mesh = build_mesh(g, trunc, 0.01, 1)
    forms = assemble_forms(mesh, prob)
    gs = ground_state(prob, forms)
    # closed form: alpha sech(beta x) with beta = 1/4, alpha^2 = 1/8
    lam_exact, E_exact = 1.0 / 16.0, -1.0 / 96.0
    edges, s = mesh.node_coords
    prof = np.abs(gs.u.at_nodes(0))
    linf = float(np.max(np.abs(prof - math.sqrt(1 / 8) / np.cosh(s / 4))))
    prob2 = ProblemSpec(g, trunc, k=2, q=4.0)
    mesh2 = build_mesh(g, trunc, 0.05, 2)
    E2 = ground_state(prob2, assemble_forms(mesh2, prob2), FlowOptions(max_iter=5000)).energy
    report(4, {
        "E": (abs(gs.energy - E_exact) <= 1e-4, f"{gs.energy:.8f}"),
        "lambda": (abs(gs.lam - lam_exact) <= 1e-3, f"{gs.lam:.8f}"),
        "profile": (linf <= 1e-3, f"Linf {linf:.2e}"),
        "E<0 (k=1,2)": (gs.energy < 0 and E2 < 0, f"{gs.energy:.5f}, {E2:.5f}"),
    })


# 5 --------------------------------------------------------------------------

def _square_well_problem(L=30.0, h=0.02):
    g = real_line()
    trunc = TruncationPolicy(L)
    V = lambda s: np.where(s <= 1.0, -1.0, 0.0)
    prob = ProblemSpec(g, trunc, potentials=PotentialSpec(V=V))
    return prob, build_mesh(g, trunc, h, 1)


def test_05_square_well_thresholds(report):
    prob, mesh = _square_well_problem()
    forms = assemble_forms(mesh, prob)
    K = core_region(prob.graph)
    rep = sigma_threshold(prob, forms, K, [2.5, 5.0, 10.0])
    oracle = square_well_ground(depth=1.0, half_width=1.0)
    report(5, {
        "Sigma0": (abs(rep.sigma0 - oracle) <= 2e-3, f"{rep.sigma0:.6f} vs {oracle:.6f}"),
        "Sigma": (abs(rep.sigma) <= 0.05, f"{rep.sigma:.4f}"),
    })


# 6 --------------------------------------------------------------------------

def _gaussian_well_report():
    g = real_line()
    trunc = TruncationPolicy(100.0)
    prob = ProblemSpec(g, trunc, q=4.0, mu=0.05,
                       potentials=PotentialSpec(V=lambda s: -2.0 * np.exp(-s**2)))
    mesh = build_mesh(g, trunc, 0.05, 1)
    forms = assemble_forms(mesh, prob)
    rep = existence_check(prob, forms, Rs=[2.5, 5.0, 10.0], opts=FlowOptions(n_starts=3, max_iter=5000))
    return prob, rep


def test_06_gaussian_well_existence(report):
    prob, rep = _gaussian_well_report()
    mass_in = rep.concentration_trace[-1][1] / prob.c
    ref = -prob.mu**2 / 96.0  # soliton energy at unit mass, strength mu
    report(6, {
        "verdict": (rep.verdict == "criterion_holds", rep.verdict),
        "mass in K_5": (mass_in >= 0.9, f"{mass_in:.4f}"),
        "tildeE": (abs(rep.tildeE - ref) <= 2e-3, f"{rep.tildeE:.3e} vs {ref:.3e}"),
    })


# 7 --------------------------------------------------------------------------

def test_07_gauge_invariance(report):
    g = star_graph(3, 1.0)
    trunc = TruncationPolicy(40.0)
    mesh = build_mesh(g, trunc, 1e-3, 1)
    V = lambda s: np.where(s <= 0.5, -5.0, 0.0)
    checks = {}
    for name, M in (("M=1", 1.0), ("M=sin", np.sin)):
        cmp = spectral_invariance(ProblemSpec(g, trunc, potentials=PotentialSpec(V=V, M=M)), mesh, 4)
        d = max(cmp.vector_distances)
        checks[name] = (cmp.max_relative_gap <= 1e-5 and d <= 1e-4,
                        f"gap {cmp.max_relative_gap:.1e} dist {d:.1e}")
    report(7, checks)


# 8 --------------------------------------------------------------------------

def _ims_errors(k, hs):
    g = real_line()
    trunc = TruncationPolicy(40.0)
    prob = ProblemSpec(g, trunc, k=k)
    sol = _soliton()
    errs, zero = [], []
    for h in hs:
        mesh = build_mesh(g, trunc, h, k)
        u = soliton_field(mesh, sol)
        errs.append(check_ims(mesh, prob, 1.0, [u]).max_defect)
        zero.append(check_ims(mesh, prob, None, [u]).max_defect)
    return errs, zero


def _soliton():
    from graphnls import soliton_oracle
    return soliton_oracle(4.0, 1.0, 1.0)


def test_08_ims_defect(report):
    hs = [0.04, 0.02, 0.01]
    e1, z1 = _ims_errors(1, hs)
    e2, z2 = _ims_errors(2, hs)
    o1, o2 = observed_order(hs, e1).order, observed_order(hs, e2).order
    report(8, {
        "order k=1": (o1 >= 1.8, f"{o1:.2f}"),
        "f=1 exact": (max(z1 + z2) == 0.0, f"{max(z1 + z2)}"),
        "order k=2": (o2 >= 1.8, f"{o2:.2f}"),
    })


# 9 --------------------------------------------------------------------------

def test_09_energy_curve(report):
    g = real_line()
    trunc = TruncationPolicy(60.0)
    prob = ProblemSpec(g, trunc, q=4.0)
    mesh = build_mesh(g, trunc, 0.02, 1)
    curve = energy_curve(prob, assemble_forms(mesh, prob), [0.25, 0.5, 0.75, 1.0])
    err = max(abs(E + t**3 / 96.0) for t, E in curve.samples)
    sub = [s for *_, s in curve.subadditivity]
    report(9, {
        "E_t": (err <= 1e-4, f"max err {err:.2e}"),
        "subadditive": (len(sub) > 0 and max(sub) < 0, f"{len(sub)} samples, max {max(sub):.2e}"),
        "concave": (curve.max_concavity_defect <= 1e-6, f"{curve.max_concavity_defect:.1e}"),
    })


# 10 -------------------------------------------------------------------------

def test_10_invariants(report):
    checks = {}
    # flow monotone, constraint preserved
    g = real_line()
    trunc = TruncationPolicy(40.0)
    prob = ProblemSpec(g, trunc, potentials=PotentialSpec(V=lambda s: -np.exp(-s**2)))
    mesh = build_mesh(g, trunc, 0.02, 1)
    forms = assemble_forms(mesh, prob)
    gs = ground_state(prob, forms, FlowOptions(trace_every=1))
    tr = np.array(gs.energy_trace)
    rise = float(np.max(np.diff(tr))) if len(tr) > 1 else 0.0
    checks["flow monotone"] = (rise <= 1e-12, f"max rise {rise:.1e}")
    dm = abs(forms.mass(forms.coeffs_of(gs.u)) - prob.c)
    checks["constraint"] = (dm <= 1e-10, f"{dm:.1e}")
    # E_c <= tildeE
    _, rep = _gaussian_well_report()
    checks["E_c<=tildeE"] = (rep.E_c <= rep.tildeE, f"{rep.E_c:.4f} <= {rep.tildeE:.2e}")
    # Sigma_R monotone
    sprob, smesh = _square_well_problem()
    srep = sigma_threshold(sprob, assemble_forms(smesh, sprob), core_region(sprob.graph), [1.0, 2.5, 5.0, 10.0])
    sr = [s for _, s in srep.sigmaR]
    checks["Sigma_R monotone"] = (srep.monotone_ok and all(np.diff(sr) >= -1e-12), f"{np.round(sr, 4).tolist()}")
    # GN constant independent of M
    gmesh = build_mesh(g, trunc, 0.02, 1)
    corpus = random_bump_corpus(gmesh, 100, seed=3)
    c0 = check_gn(gmesh, 0.0, corpus).fitted_constant
    c1 = check_gn(gmesh, np.sin, corpus).fitted_constant
    checks["GN vs M"] = (abs(c1 - c0) <= 0.1 * c0, f"{c0:.4f} vs {c1:.4f}")
    # parser vs reference evaluator
    from graphnls import parse_expression
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        text = random_expression(rng)
        x = float(rng.uniform(-3, 3))
        got = float(parse_expression(text)(np.array([x]))[0])
        ref = reference_eval(text, x)
        worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
    checks["parser"] = (worst <= 1e-12, f"1000 points, max rel diff {worst:.1e}")
    report(10, checks)


# 11 -------------------------------------------------------------------------

def test_11_mu_star(report):
    g4 = gamma_q(4.0)
    a, b = mu_star(g4, 4.0), mu_star(4.0 * g4, 4.0)
    report(11, {"mu_star": (a == 1.0 and b == 2.0, f"{a!r}, {b!r}")})


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
