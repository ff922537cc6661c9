"""Magnetic potentials on trees can be gauged away.

On a tree the phase theta = int M along root paths satisfies theta' = M, and
multiplying by exp(i theta) maps the plain operator onto the magnetic one.
The spectra agree up to a discretisation error that shrinks like h^2.
"""

import numpy as np

from graphnls import (
    PotentialSpec,
    ProblemSpec,
    TruncationPolicy,
    build_mesh,
    gauge_phase,
    spectral_invariance,
    star_graph,
)

g = star_graph(3, None)
trunc = TruncationPolicy(30.0)
theta = gauge_phase(g, lambda s: s)
print("theta on a ray for M(x) = x:", np.round(theta.at(0, [0.0, 0.5, 1.0, 2.0]), 6), "(s^2/2)")

prob = ProblemSpec(g, trunc, potentials=PotentialSpec(V=lambda s: -2 * np.exp(-s**2), M=np.sin))
for h in (0.04, 0.02, 0.01):
    rep = spectral_invariance(prob, build_mesh(g, trunc, h, 1), m=3)
    gap = max(abs(a - b) for a, b in zip(rep.eigenvalues_magnetic, rep.eigenvalues_plain))
    print(f"h={h:5.3f}  eigenvalue gap={gap:.3e}  eigenvector distance={max(rep.vector_distances):.3e}")
