"""Kirchhoff spectra on small graphs.

The interval [0, pi] has eigenvalues n^2.  The equilateral 3-star has a
double eigenvalue from the two antisymmetric modes.  On the line with a
Gaussian well a single bound state sits below the essential spectrum, and the
restricted bottoms Sigma_R climb towards the threshold 0 as R grows.
"""

import math

import numpy as np

from graphnls import (
    PotentialSpec,
    ProblemSpec,
    TruncationPolicy,
    assemble_forms,
    build_mesh,
    core_region,
    interval_graph,
    lowest_eigenpairs,
    real_line,
    sigma_threshold,
    star_graph,
)


def spectrum(g, h, m, V=None, trunc=TruncationPolicy(40.0)):
    prob = ProblemSpec(g, trunc, potentials=PotentialSpec(V=V))
    forms = assemble_forms(build_mesh(g, trunc, h, 1), prob)
    return prob, forms, [lam for lam, _ in lowest_eigenpairs(forms, m)]


_, _, vals = spectrum(interval_graph(math.pi), math.pi / 400, 4)
print("interval [0, pi]:", np.round(vals, 5), " exact 0 1 4 9")

_, _, vals = spectrum(star_graph(3), 0.01, 4)
print("3-star, unit edges:", np.round(vals, 5),
      " exact 0, (pi/2)^2 twice, pi^2:", round((math.pi / 2) ** 2, 5), round(math.pi**2, 5))

g = real_line()
trunc = TruncationPolicy(40.0)
prob, forms, vals = spectrum(g, 0.02, 1, V=lambda s: -2 * np.exp(-s**2), trunc=trunc)
rep = sigma_threshold(prob, forms, core_region(g), [2.5, 5.0, 10.0, 20.0])
print("line with well: Sigma_0 =", round(rep.sigma0, 6))
for R, s in rep.sigmaR:
    print(f"  Sigma_R at R={R:5.1f}: {s: .6f}")
print("  extrapolated Sigma:", round(rep.sigma, 5), "+-", round(rep.sigma_err, 5))
