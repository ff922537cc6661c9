"""Existence verdicts: compact graph, a binding well, and a free star.

A compact graph always has a minimiser.  A Gaussian well on the line with a
weak nonlinearity satisfies the small-mu condition and E_c < E_tilde, so the
criterion holds.  On the free 3-ray star the flow lets mass leak down a ray
and the energy never drops below the threshold, so the verdict is not
criterion_holds.  Its small_mu_condition reads true only because Dirichlet
truncation lifts the restricted bottoms Sigma_R above Sigma_0.
"""

import numpy as np

from graphnls import (
    FlowOptions,
    PotentialSpec,
    ProblemSpec,
    TruncationPolicy,
    assemble_forms,
    build_mesh,
    existence_check,
    real_line,
    star_graph,
)


def report(name, g, trunc, Rs=None, opts=None, **kw):
    prob = ProblemSpec(g, trunc, **kw)
    forms = assemble_forms(build_mesh(g, trunc, 0.05, 1), prob)
    rep = existence_check(prob, forms, Rs=Rs, opts=opts)
    print(f"{name}: verdict={rep.verdict}")
    for key, val in rep.summary().items():
        print(f"    {key} = {val}")


report("compact 3-star", star_graph(3), TruncationPolicy(40.0))
report("line, well, mu=0.05", real_line(), TruncationPolicy(100.0), Rs=[2.5, 5.0, 10.0],
       mu=0.05, potentials=PotentialSpec(V=lambda s: -2 * np.exp(-s**2)))
report("free 3-ray star", star_graph(3, None), TruncationPolicy(30.0), Rs=[3.75, 7.5, 15.0],
       opts=FlowOptions(n_starts=3, max_iter=3000))
