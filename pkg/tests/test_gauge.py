import numpy as np
import pytest

from graphnls import (
    PotentialSpec,
    ProblemSpec,
    TruncationPolicy,
    assemble_forms,
    build_graph,
    build_mesh,
    gauge_phase,
    gauge_transform,
    ground_state,
    interpolate,
    norms,
    real_line,
    spectral_invariance,
    star_graph,
)
from graphnls.errors import MeshMismatch, NotATree

T30 = TruncationPolicy(30.0)
LINE = real_line()
S = np.linspace(0.0, 5.0, 11)


def test_zero_field_gives_zero_phase():
    th = gauge_phase(star_graph(3, None), 0.0)
    for e in range(3):
        assert np.all(th.at(e, S) == 0.0)


def test_constant_field_on_line():
    th = gauge_phase(LINE, [2.0, 2.0])
    for e in range(2):
        assert np.allclose(th.at(e, S), 2.0 * S, atol=1e-14)


def test_linear_field_on_star():
    th = gauge_phase(star_graph(3, None), lambda s: s)
    for e in range(3):
        assert np.allclose(th.at(e, S), S**2 / 2, atol=1e-13)
    assert th.at(1, 0.5)[0] == pytest.approx(0.125, abs=1e-14)


def test_phase_through_interior_vertex():
    # path a -> b -> ray, integral of M = 1 along the unit edge is carried onto the ray
    g = build_graph({"vertices": ["a", "b"], "edges": [
        {"from": "a", "to": "b", "length": 1.0}, {"from": "b", "to": "ray"}]})
    th = gauge_phase(g, 1.0, root="a")
    assert th.at(1, 0.0)[0] == pytest.approx(1.0, abs=1e-14)
    # rooted at b, the unit edge is traversed backwards
    th_b = gauge_phase(g, 1.0, root="b")
    assert th_b.at(0, 0.0)[0] == pytest.approx(-1.0, abs=1e-14)
    assert th_b.at(1, 2.0)[0] == pytest.approx(2.0, abs=1e-14)


def test_not_a_tree_and_mesh_mismatch():
    loop = build_graph({"vertices": ["v0", "v1"], "edges": [
        {"from": "v0", "to": "v1", "length": 1.0}, {"from": "v1", "to": "v0", "length": 2.0}]})
    with pytest.raises(NotATree):
        gauge_phase(loop, 1.0)
    g = star_graph(3, None)
    with pytest.raises(MeshMismatch):
        gauge_phase(g, 1.0, mesh=build_mesh(LINE, T30, 0.1, 1))
    th = gauge_phase(g, 1.0, mesh=build_mesh(g, T30, 0.1, 1))
    with pytest.raises(MeshMismatch):
        gauge_transform(interpolate(build_mesh(g, T30, 0.1, 1), np.exp), th)


def test_transform_identity_isometry_and_inverse():
    g = star_graph(3, None)
    mesh = build_mesh(g, T30, 0.05, 1)
    u = interpolate(mesh, lambda s: np.exp(-s**2) * (1 + s))
    zero = gauge_phase(g, 0.0, mesh=mesh)
    assert np.array_equal(gauge_transform(u, zero).at_quad(0), u.at_quad(0))
    th = gauge_phase(g, np.sin, mesh=mesh)
    v = gauge_transform(u, th)
    assert norms(v)["l2"] == pytest.approx(norms(u)["l2"], rel=1e-12)
    back = gauge_transform(v, th, "inverse")
    assert np.allclose(back.at_quad(0), u.at_quad(0), atol=1e-12)
    assert np.allclose(np.abs(v.at_nodes(0)), np.abs(u.at_nodes(0)), atol=1e-12)
    with pytest.raises(ValueError):
        gauge_transform(u, th, "sideways")


def _sawtooth(s):
    return s - np.floor(s)


@pytest.mark.parametrize("M", [1.0, np.sin, _sawtooth])
def test_spectral_invariance_on_star(M):
    # the discrete phase is resolved to O(h^2) in absolute terms, which dominates
    # the relative gap of the near-threshold eigenvalues, so check convergence
    g = star_graph(3, None)
    prob = ProblemSpec(g, T30, potentials=PotentialSpec(V=lambda s: -2 * np.exp(-s**2), M=M))
    gaps, dists = [], []
    for h in (0.02, 0.01):
        rep = spectral_invariance(prob, build_mesh(g, T30, h, 1), m=4)
        gaps.append(max(abs(a - b) for a, b in zip(rep.eigenvalues_magnetic, rep.eigenvalues_plain)))
        dists.append(max(rep.vector_distances))
    assert gaps[-1] <= 5e-5 and dists[-1] <= 2e-4
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.1)
    assert dists[0] / dists[1] == pytest.approx(4.0, rel=0.1)


def test_invariance_independent_of_root():
    g = build_graph({"vertices": ["a", "b"], "edges": [
        {"from": "a", "to": "b", "length": 2.0}, {"from": "a", "to": "ray"}, {"from": "b", "to": "ray"}]})
    prob = ProblemSpec(g, T30, potentials=PotentialSpec(V=lambda s: -np.exp(-s), M=np.cos))
    mesh = build_mesh(g, T30, 0.05, 1)
    a = spectral_invariance(prob, mesh, m=3, root="a")
    b = spectral_invariance(prob, mesh, m=3, root="b")
    assert np.allclose(a.eigenvalues_magnetic, b.eigenvalues_magnetic, atol=1e-10)
    assert np.allclose(a.vector_distances, b.vector_distances, atol=1e-6)


def test_magnetic_ground_state_modulus_has_no_interior_zero():
    g = star_graph(3, None)
    prob = ProblemSpec(g, T30, potentials=PotentialSpec(V=lambda s: -2 * np.exp(-s**2), M=np.sin))
    mesh = build_mesh(g, T30, 0.05, 1)
    gs = ground_state(prob, assemble_forms(mesh, prob))
    mod = np.abs(gs.u.at_nodes(0))
    _, s = mesh.node_coords
    assert np.all(mod[s < 29.9] > 0.0)
