import math

import numpy as np
import pytest

from graphnls import (
    RegionSpec,
    TruncationPolicy,
    build_graph,
    build_mesh,
    core_region,
    field_from_text,
    field_to_text,
    interpolate,
    interval_graph,
    norms,
    partition_of_unity,
    real_line,
    star_graph,
)
from graphnls.errors import NonFiniteSample, TruncationTooCoarse, UnboundedRegion, UnsupportedOrder

T40 = TruncationPolicy(40.0)


# -- DOF counting ------------------------------------------------------------------

def test_interval_dof_count():
    m = build_mesh(interval_graph(math.pi), T40, math.pi / 4, 1)
    assert m.n_el == 4 and m.n_dofs == 5


def test_star_dof_count_shares_centre():
    m = build_mesh(star_graph(3), T40, 0.5, 1)
    assert m.n_el == 6 and m.n_dofs == 7


def test_k2_leaf_slopes_eliminated():
    m = build_mesh(interval_graph(1.0), T40, 0.5, 2)
    assert m.n_el == 2 and m.n_dofs == 4


def test_truncated_ray_far_end_eliminated():
    m = build_mesh(real_line(), TruncationPolicy(10.0), 1.0, 1)
    # 20 elements, 21 nodes, both far ends Dirichlet
    assert m.n_dofs == 19


def test_mesh_errors():
    with pytest.raises(UnsupportedOrder):
        build_mesh(interval_graph(1.0), T40, 0.1, 4)
    with pytest.raises(TruncationTooCoarse):
        build_mesh(real_line(), TruncationPolicy(1.0), 0.5, 1)


# -- interpolation and norms ----------------------------------------------------------

def test_interpolate_zero_and_one():
    m = build_mesh(star_graph(3), T40, 0.1, 1)
    assert not np.any(interpolate(m, lambda s: 0 * s).coeffs)
    assert np.all(interpolate(m, lambda s: 1 + 0 * s).coeffs == 1.0)


def test_interpolate_sine_norm():
    m = build_mesh(interval_graph(math.pi), T40, math.pi / 1000, 1)
    assert norms(interpolate(m, np.sin))["l2"] == pytest.approx(math.sqrt(math.pi / 2), abs=1e-4)


def test_interpolate_nonfinite():
    m = build_mesh(interval_graph(1.0), T40, 0.1, 1)
    with pytest.raises(NonFiniteSample):
        interpolate(m, lambda s: np.full_like(s, np.nan))


def test_norms_of_constants():
    m = build_mesh(interval_graph(math.pi), T40, 0.1, 1)
    nm = norms(interpolate(m, lambda s: 1 + 0 * s), 4)
    assert nm["l2"] == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert nm["lp"] == pytest.approx(math.pi**0.25, rel=1e-14)
    assert nm["hk_semi"] == 0.0
    zero = norms(interpolate(m, lambda s: 0 * s), math.inf)
    assert zero == {"l2": 0.0, "lp": 0.0, "hk_semi": 0.0}


@pytest.mark.parametrize("k", [1, 2])
def test_soliton_interpolant_has_unit_mass(k):
    from graphnls import soliton_oracle
    from graphnls.verify import soliton_field
    m = build_mesh(real_line(), T40, 0.01, k)
    assert norms(soliton_field(m, soliton_oracle(4.0)))["l2"] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("k", [1, 2])
def test_quadrature_convergence_order(k):
    # cos(pi x / 2) on [0, 2] has zero slope at both leaves, as the k = 2 space requires
    exact = 1.0
    f = lambda s: np.cos(math.pi * s / 2)
    df = lambda s: -math.pi / 2 * np.sin(math.pi * s / 2)
    errs = []
    hs = [0.2, 0.1, 0.05]
    for h in hs:
        m = build_mesh(interval_graph(2.0), T40, h, k)
        errs.append(abs(norms(interpolate(m, f, [df] if k == 2 else None))["l2"] ** 2 - exact))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 2 * k - 0.2


def test_k2_vertex_conformity():
    # even data shared, odd data sum to zero at interior vertices
    g = star_graph(3)
    m = build_mesh(g, T40, 0.1, 2)
    rng = np.random.default_rng(0)
    u = interpolate(m, [lambda s, a=a: np.sin(a * s + 0.3) for a in rng.uniform(1, 2, 3)])
    q = u.at_nodes(1)
    edges, s = m.node_coords
    at_c = (s == 0.0)
    # outward derivatives from the centre sum to zero
    assert abs(q[at_c].sum()) <= 1e-10


def test_field_text_round_trip():
    m = build_mesh(star_graph(3), T40, 0.25, 2)
    u = interpolate(m, np.cos, [lambda s: -np.sin(s)])
    edges, s, vals = field_from_text(field_to_text(u))
    e0, s0 = m.node_coords
    order = np.lexsort((s0, e0))
    assert np.array_equal(edges, e0[order]) and np.allclose(s, s0[order], rtol=0, atol=0)
    assert np.array_equal(vals[:, 0], u.at_nodes(0)[order])


# -- partitions of unity -----------------------------------------------------------------

def test_unity_on_the_line():
    g = real_line()
    m = build_mesh(g, T40, 0.05, 1)
    up = partition_of_unity(m, core_region(g), 1.0)
    assert up.unity_defect <= 1e-12
    _, s = m.node_coords
    P, Pt = up.Psi.at_nodes(0), up.Psi_tilde.at_nodes(0)
    assert np.all(P[s <= 1.0] == 1.0) and np.all(P[s >= 2.0] == 0.0)
    # the truncated far ends carry Dirichlet data
    assert np.all(Pt[(s >= 2.0) & (s < 40.0)] == 1.0)
    assert np.all((P >= 0) & (P <= 1) & (Pt >= 0) & (Pt <= 1))


def test_unity_saturates_on_compact_graph():
    g = star_graph(3)
    m = build_mesh(g, T40, 0.1, 1)
    up = partition_of_unity(m, RegionSpec.from_vertex(g, "c"), 5.0)
    assert np.all(up.Psi.coeffs == 1.0) and not np.any(up.Psi_tilde.coeffs)


@pytest.mark.parametrize("k", [1, 2])
def test_unity_derivative_scaling(k):
    g = real_line()
    m = build_mesh(g, T40, 0.05, k)
    bounds = [partition_of_unity(m, core_region(g), n).derivative_bound for n in (1, 2, 4, 8)]
    assert max(bounds) <= 1.05 * min(bounds)


def test_unity_rejects_unbounded_region():
    g = real_line()
    m = build_mesh(g, T40, 0.1, 1)
    with pytest.raises(UnboundedRegion):
        partition_of_unity(m, RegionSpec.whole_graph(), 1.0)


def test_dirichlet_truncation_monotone():
    from graphnls import PotentialSpec, ProblemSpec, assemble_forms, lowest_eigenpairs
    g = real_line()
    vals = []
    for L in (10.0, 20.0, 40.0):
        trunc = TruncationPolicy(L)
        prob = ProblemSpec(g, trunc, potentials=PotentialSpec(V=lambda s: -np.exp(-s**2)))
        vals.append(lowest_eigenpairs(assemble_forms(build_mesh(g, trunc, 0.05, 1), prob), 1)[0][0])
    assert vals[0] >= vals[1] - 1e-12 >= vals[2] - 2e-12
