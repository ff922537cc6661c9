"""Command line front end: ``graphnls <command> --graph FILE [options]``.

Commands: spectrum, groundstate, threshold, check, verify, gauge.  Every run
writes a header block, data rows and a summary block; on error a single
diagnostic line goes to stderr, the exit status is nonzero and no output file
is written.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import GraphNLSError, InvalidProblem
from .gauge import spectral_invariance
from .graph import core_region
from .io import format_region, parse_graph_file, parse_region, render_output
from .mesh import TruncationPolicy, build_mesh, field_to_text
from .minimize import FlowOptions, default_radii, existence_check, ground_state, ionization_threshold
from .operators import PotentialSpec, ProblemSpec, assemble_forms
from .spectral import clusters, lowest_eigenpairs, sigma_threshold
from .verify import check_gn, check_ims, check_sobolev, random_bump_corpus

__all__ = ["RunConfig", "run", "main", "COMMANDS"]

COMMANDS = ("spectrum", "groundstate", "threshold", "check", "verify", "gauge")


@dataclass
class RunConfig:
    graph: str
    k: int = 1
    q: float = 4.0
    mu: float = 1.0
    mass: float = 1.0
    h: float = 0.02
    trunc: float = 40.0
    region: str | None = None
    seed: int = 0
    out: str | None = None
    m: int = 4
    radii: list = field(default_factory=list)
    corpus: int = 50
    n_starts: int = 1


def _setup(cfg: RunConfig):
    path = Path(cfg.graph)
    if not path.is_file():
        raise InvalidProblem(f"graph file {cfg.graph!r} not found")
    gf = parse_graph_file(path.read_text(encoding="utf-8"))
    g = gf.graph
    region = parse_region(cfg.region, g)
    trunc = TruncationPolicy(cfg.trunc)
    kw = {"support": region} if region is not None and not region.whole else {}
    prob = ProblemSpec(g, trunc, cfg.k, cfg.q, cfg.mu, cfg.mass, gf.potentials(), **kw)
    mesh = build_mesh(g, trunc, cfg.h, cfg.k)
    return gf, prob, mesh, region


def _radii(cfg, prob):
    return list(cfg.radii) if cfg.radii else default_radii(prob)


def _spectrum(cfg, prob, mesh, region):
    forms = assemble_forms(mesh, prob)
    pairs = lowest_eigenpairs(forms, cfg.m)
    vals = [lam for lam, _ in pairs]
    rows = [(i, v) for i, v in enumerate(vals)]
    summary = {"sigma0": vals[0], "eigenvalues": vals,
               "multiplets": [grp for grp in clusters(vals) if len(grp) > 1]}
    if prob.graph.rays:
        K = region or core_region(prob.graph)
        rep = sigma_threshold(prob, forms, K, _radii(cfg, prob))
        summary.update(sigmaR=[s for _, s in rep.sigmaR], sigma=rep.sigma,
                       sigma_err=rep.sigma_err, sigmaR_monotone=rep.monotone_ok)
    return ["index", "eigenvalue"], rows, summary, {}


def _groundstate(cfg, prob, mesh, region):
    forms = assemble_forms(mesh, prob)
    gs = ground_state(prob, forms, FlowOptions(seed=cfg.seed, n_starts=cfg.n_starts))
    rows = [(i, e) for i, e in enumerate(gs.energy_trace)]
    summary = {"energy": gs.energy, "lambda": gs.lam, "residual": gs.residual,
               "iterations": gs.iterations, "converged": gs.converged}
    extra = {".profile": field_to_text(gs.u)}
    return ["iteration", "energy"], rows, summary, extra


def _threshold(cfg, prob, mesh, region):
    if not prob.graph.rays:
        # nothing escapes to infinity on a compact graph
        return ["R", "value"], [], {"tildeE": float("inf"), "tildeE_error": 0.0, "reference": None}, {}
    forms = assemble_forms(mesh, prob)
    K = core_region(prob.graph)
    thr = ionization_threshold(prob, forms, K, _radii(cfg, prob), FlowOptions(seed=cfg.seed))
    summary = {"tildeE": thr.estimate, "tildeE_error": thr.error, "reference": thr.reference}
    return ["R", "value"], thr.curve, summary, {}


def _check(cfg, prob, mesh, region):
    forms = assemble_forms(mesh, prob)
    rep = existence_check(prob, forms, Rs=_radii(cfg, prob) if prob.graph.rays else None,
                          opts=FlowOptions(seed=cfg.seed, n_starts=max(3, cfg.n_starts)))
    summary = rep.summary()
    if rep.concentration_trace:
        summary["final_mass_in_K"] = rep.concentration_trace[-1][1]
    summary["subadditivity"] = [s for *_, s in rep.subadditivity_samples]
    return ["R", "tildeE_R"], rep.tildeE_curve, summary, {}


def _verify(cfg, prob, mesh, region):
    corpus = random_bump_corpus(mesh, cfg.corpus, cfg.seed)
    rows, summary = [], {}
    M = prob.potentials.M if prob.k == 1 else None
    sob = check_sobolev(mesh, M, corpus)
    rows.append(("sobolev", sob.fitted_constant, len(sob.violations)))
    summary["sobolev_constant"] = sob.fitted_constant
    if prob.graph.rays:
        gn = check_gn(mesh, M, corpus, p=prob.q)
        rows.append(("gagliardo_nirenberg", gn.fitted_constant, len(gn.violations)))
        summary["gn_constant"] = gn.fitted_constant
    if prob.k <= 2:
        ims = check_ims(mesh, prob.with_(potentials=PotentialSpec(V=prob.potentials.V)),
                        1.0, corpus[:5])
        rows.append(("ims_max_defect", ims.max_defect, 0))
        summary["ims_max_defect"] = ims.max_defect
    summary["passed"] = all(r[2] == 0 for r in rows)
    return ["check", "value", "violations"], rows, summary, {}


def _gauge(cfg, prob, mesh, region):
    cmp = spectral_invariance(prob, mesh, cfg.m)
    rows = [(i, a, b) for i, (a, b) in enumerate(zip(cmp.eigenvalues_magnetic, cmp.eigenvalues_plain))]
    summary = {"max_relative_gap": cmp.max_relative_gap,
               "max_absolute_gap": max(abs(a - b) for _, a, b in rows),
               "max_vector_distance": max(cmp.vector_distances),
               "clusters": cmp.clusters}
    return ["index", "eigenvalue_magnetic", "eigenvalue_plain"], rows, summary, {}


_HANDLERS = {
    "spectrum": _spectrum,
    "groundstate": _groundstate,
    "threshold": _threshold,
    "check": _check,
    "verify": _verify,
    "gauge": _gauge,
}


def run(command: str, config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one command; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if command not in _HANDLERS:
        print(f"error: unknown command {command!r}", file=stderr)
        return 2
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            gf, prob, mesh, region = _setup(config)
            columns, rows, summary, extra = _HANDLERS[command](config, prob, mesh, region)
        if caught:
            summary["warnings"] = len(caught)
        echo = asdict(config)
        echo["region"] = format_region(region)
        text = render_output(command, echo, columns, rows, summary)
    except GraphNLSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
        for suffix, content in extra.items():
            Path(config.out + suffix).write_text(content, encoding="utf-8")
    else:
        stdout.write(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphnls", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--graph", required=True, help="JSON graph file")
    p.add_argument("--k", type=int, default=1, help="operator order")
    p.add_argument("--q", type=float, default=4.0, help="nonlinearity exponent")
    p.add_argument("--mu", type=float, default=1.0, help="nonlinearity strength")
    p.add_argument("--mass", type=float, default=1.0, help="mass constraint c")
    p.add_argument("--h", type=float, default=0.02, help="target mesh size")
    p.add_argument("--trunc", type=float, default=40.0, help="ray truncation length")
    p.add_argument("--region", default=None,
                   help="nonlinearity support: 'all', 'v:<vertex>' or '<edge>:<lo>..<hi>' items")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")
    p.add_argument("--m", type=int, default=4, help="number of eigenpairs")
    p.add_argument("--radii", type=float, nargs="*", default=[], help="radii R for thresholds")
    p.add_argument("--corpus", type=int, default=50, help="random fields for 'verify'")
    p.add_argument("--starts", type=int, default=1, dest="n_starts", help="flow multistart count")
    return p


def main(argv=None) -> int:
    args = vars(_parser().parse_args(argv))
    command = args.pop("command")
    return run(command, RunConfig(**args))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
