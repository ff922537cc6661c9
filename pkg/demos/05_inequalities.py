"""Sampled functional inequalities and the IMS localisation identity.

The Gagliardo-Nirenberg ratio on the line is maximised by the soliton, whose
value is the sharp constant 3^(-1/2) at p = 4.  Random bumps stay below it.
The IMS defect for a smooth partition of unity converges at second order.
"""

import math

import numpy as np

from graphnls import (
    ProblemSpec,
    TruncationPolicy,
    build_mesh,
    check_gn,
    ims_convergence,
    random_bump_corpus,
    real_line,
    soliton_oracle,
    star_graph,
)
from graphnls.verify import soliton_field

g = real_line()
mesh = build_mesh(g, TruncationPolicy(40.0), 0.02, 1)
corpus = random_bump_corpus(mesh, 200, seed=1)
print("GN ratio, random bumps:", round(check_gn(mesh, 0.0, corpus).fitted_constant, 6))
print("GN ratio, soliton:     ", round(check_gn(mesh, 0.0, [soliton_field(mesh, soliton_oracle(4.0))]).fitted_constant, 6))
print("sharp constant:        ", round(1 / math.sqrt(3), 6))

star = star_graph(3, None)
rep = ims_convergence(ProblemSpec(star, TruncationPolicy(40.0)), [0.04, 0.02, 0.01], 1.0,
                      lambda s: np.exp(-s**2) * np.cos(s))
print("\nIMS defect on the 3-star:", ["%.3e" % e for e in rep.errors], " order", round(rep.order, 3))
