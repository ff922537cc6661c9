import io
import math
from pathlib import Path

import pytest

from graphnls import lowest_eigenpairs
from graphnls.cli import COMMANDS, RunConfig, main, run

GRAPHS = Path(__file__).resolve().parent.parent / "demos" / "graphs"


def _run(command, **kw):
    out, err = io.StringIO(), io.StringIO()
    code = run(command, RunConfig(**kw), out, err)
    return code, out.getvalue(), err.getvalue()


def _summary(text):
    lines = text.splitlines()
    block = lines[lines.index("# summary") + 1:]
    return dict(line.split("=", 1) for line in block)


def _data(text):
    lines = text.splitlines()
    return [r.split() for r in lines[lines.index("# data") + 2:lines.index("# summary")]]


def test_spectrum_interval():
    code, out, err = _run("spectrum", graph=str(GRAPHS / "interval_pi.json"), h=math.pi / 400, m=3)
    assert code == 0 and err == ""
    assert out.startswith("# graphnls spectrum\n# config\n")
    vals = [float(r[1]) for r in _data(out)]
    for v, ref in zip(vals, [0.0, 1.0, 4.0]):
        assert v == pytest.approx(ref, abs=1e-3)
    assert "sigma" not in _summary(out)


def test_spectrum_with_rays_reports_threshold():
    code, out, _ = _run("spectrum", graph=str(GRAPHS / "line_gaussian_well.json"), h=0.05,
                        trunc=30.0, radii=[2.5, 5.0, 10.0], m=2)
    s = _summary(out)
    assert code == 0 and float(s["sigma0"]) < 0 and abs(float(s["sigma"])) < 0.05


def test_groundstate_linear_limit_and_profile(tmp_path):
    target = tmp_path / "gs.txt"
    code, out, _ = _run("groundstate", graph=str(GRAPHS / "star3.json"), h=0.02, mu=0.0,
                        mass=2.0, out=str(target))
    assert code == 0 and out == ""
    s = _summary(target.read_text())
    assert float(s["energy"]) == pytest.approx(0.0, abs=1e-12)  # sigma0 = 0 without potential
    assert s["converged"] == "true"
    assert (tmp_path / "gs.txt.profile").read_text().strip()


def test_groundstate_matches_library_linear_energy():
    # Gaussian well on the line: mu = 0 gives E = sigma0 c / 2
    from graphnls import ProblemSpec, TruncationPolicy, assemble_forms, build_mesh, parse_graph_file
    gf = parse_graph_file((GRAPHS / "line_gaussian_well.json").read_text())
    trunc = TruncationPolicy(30.0)
    prob = ProblemSpec(gf.graph, trunc, mu=0.0, c=1.5, potentials=gf.potentials())
    sigma0 = lowest_eigenpairs(assemble_forms(build_mesh(gf.graph, trunc, 0.05, 1), prob), 1)[0][0]
    code, out, _ = _run("groundstate", graph=str(GRAPHS / "line_gaussian_well.json"), h=0.05,
                        trunc=30.0, mu=0.0, mass=1.5)
    assert code == 0
    assert float(_summary(out)["energy"]) == pytest.approx(sigma0 * 1.5 / 2, rel=1e-10)


def test_threshold_command():
    code, out, _ = _run("threshold", graph=str(GRAPHS / "line.json"), h=0.05, trunc=60.0,
                        radii=[5.0, 10.0, 20.0])
    s = _summary(out)
    assert code == 0
    assert float(s["tildeE"]) == pytest.approx(-1 / 96, abs=2e-3)
    assert float(s["reference"]) == pytest.approx(-1 / 96, rel=1e-12)
    code, out, _ = _run("threshold", graph=str(GRAPHS / "star3.json"), h=0.05)
    assert code == 0 and _summary(out)["tildeE"] == "inf"


def test_check_small_mu_criterion_holds():
    code, out, _ = _run("check", graph=str(GRAPHS / "line_gaussian_well.json"), mu=0.05,
                        trunc=100.0, h=0.05, radii=[2.5, 5.0, 10.0])
    s = _summary(out)
    assert code == 0 and s["verdict"] == "criterion_holds" and s["small_mu_condition"] == "true"


def test_check_compact_graph():
    code, out, _ = _run("check", graph=str(GRAPHS / "star3.json"), h=0.05)
    assert code == 0 and _summary(out)["verdict"] == "minimizer_found"


def test_verify_and_gauge():
    code, out, _ = _run("verify", graph=str(GRAPHS / "line.json"), h=0.05, corpus=20)
    s = _summary(out)
    assert code == 0 and s["passed"] == "true"
    assert float(s["gn_constant"]) <= 1 / math.sqrt(3) + 1e-6
    code, out, _ = _run("gauge", graph=str(GRAPHS / "star3_magnetic.json"), h=0.02, m=3)
    s = _summary(out)
    assert code == 0 and float(s["max_absolute_gap"]) <= 5e-4


def test_every_command_runs():
    for command in COMMANDS:
        code, out, err = _run(command, graph=str(GRAPHS / "star3.json"), h=0.1, m=2, corpus=5)
        assert code == 0, (command, err)
        assert f"# graphnls {command}" in out and "# summary" in out


def test_determinism_byte_identical():
    kw = dict(graph=str(GRAPHS / "star3_rays.json"), h=0.05, trunc=20.0, seed=3, n_starts=2)
    a = _run("groundstate", **kw)[1]
    b = _run("groundstate", **kw)[1]
    assert a == b


@pytest.mark.parametrize("kw, name", [
    (dict(graph="missing.json"), "InvalidProblem"),
    (dict(graph=str(GRAPHS / "line.json"), q=7.0), "InvalidProblem"),
    (dict(graph=str(GRAPHS / "line.json"), h=-1.0), ""),
    (dict(graph=str(GRAPHS / "line.json"), region="0:5"), "SchemaError"),
])
def test_error_paths(tmp_path, kw, name):
    target = tmp_path / "o.txt"
    code, out, err = _run("groundstate", out=str(target), **kw)
    assert code != 0 and out == ""
    assert len(err.strip().splitlines()) == 1 and err.startswith("error: ") and name in err
    assert not target.exists()


def test_malformed_graph_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": ["a"], "edges": [{"from": "a", "to": "ray", "V": "foo(x)"}]}')
    code, _, err = _run("spectrum", graph=str(bad))
    assert code == 1 and "UnknownIdentifier" in err


def test_unknown_command():
    code, _, err = _run("dance", graph=str(GRAPHS / "line.json"))
    assert code == 2 and "unknown command" in err


def test_main_argv(tmp_path, capsys):
    target = tmp_path / "s.txt"
    code = main(["spectrum", "--graph", str(GRAPHS / "interval_pi.json"), "--h", "0.05",
                 "--m", "2", "--out", str(target)])
    assert code == 0 and target.read_text().startswith("# graphnls spectrum")
    with pytest.raises(SystemExit):
        main(["nonsense", "--graph", "x"])
