"""Closed-form NLS ground state on the real line.

For ``2 < q < 6`` the minimiser of ``1/2 int |u'|^2 - mu/q int |u|^q`` under
``int |u|^2 = c`` is ``alpha * sech(beta x)**(2/(q-2))`` with

* ``alpha = (q lam / (2 mu))**(1/(q-2))``, ``beta = (q-2) sqrt(lam) / 2``,
* ``lam`` fixed by the mass: ``c = alpha**2 / beta * I(4/(q-2))`` where
  ``I(a) = int sech(y)**a dy = sqrt(pi) Gamma(a/2) / Gamma((a+1)/2)``,
* energy ``E = -lam c (6-q) / (2 (q+2))`` (virial identity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExponentOutOfRange, NonNegativeSigma0

__all__ = ["SolitonSolution", "soliton_oracle", "gamma_q", "mu_star"]


@dataclass(frozen=True)
class SolitonSolution:
    q: float
    mu: float
    c: float
    energy: float
    lam: float
    alpha: float
    beta: float

    @property
    def exponent(self) -> float:
        return 2.0 / (self.q - 2.0)

    def profile(self, x):
        x = np.asarray(x, dtype=float)
        # sech written with exp(-|y|) so the far tail underflows instead of overflowing
        e = np.exp(-np.abs(self.beta * x))
        return self.alpha * (2.0 * e / (1.0 + e * e)) ** self.exponent

    def profile_derivative(self, x, order: int = 1):
        """Derivatives of the profile up to order 3 (used for Hermite interpolation)."""
        x = np.asarray(x, dtype=float)
        p, b = self.exponent, self.beta
        th = np.tanh(b * x)
        u = self.profile(x)
        if order == 1:
            return -p * b * th * u
        if order == 2:
            return p * b**2 * u * (p * th**2 - (1 - th**2))
        if order == 3:
            # d/dx [p b^2 u (p th^2 - sech^2)], using th' = b sech^2, (sech^2)' = -2 b sech^2 th
            s2 = 1 - th**2
            du = -p * b * th * u
            inner = p * th**2 - s2
            dinner = 2 * p * th * b * s2 + 2 * b * s2 * th
            return p * b**2 * (du * inner + u * dinner)
        raise ValueError("order must be 1, 2 or 3")


def _sech_power_integral(a: float) -> float:
    return math.sqrt(math.pi) * math.gamma(a / 2) / math.gamma((a + 1) / 2)


def soliton_oracle(q: float, mu: float = 1.0, c: float = 1.0) -> SolitonSolution:
    if not 2 < q < 6:
        raise ExponentOutOfRange(f"q={q} outside (2, 6)")
    if mu <= 0 or c <= 0:
        raise ValueError("mu and c must be positive")
    I = _sech_power_integral(4.0 / (q - 2.0))
    # c = (q lam / 2 mu)^(2/(q-2)) * 2 / ((q-2) sqrt(lam)) * I
    expo = (6.0 - q) / (2.0 * (q - 2.0))
    rhs = c * (q - 2.0) / (2.0 * I) * (2.0 * mu / q) ** (2.0 / (q - 2.0))
    lam = rhs ** (1.0 / expo)
    alpha = (q * lam / (2.0 * mu)) ** (1.0 / (q - 2.0))
    beta = (q - 2.0) * math.sqrt(lam) / 2.0
    energy = -lam * c * (6.0 - q) / (2.0 * (q + 2.0))
    return SolitonSolution(q, mu, c, energy, lam, alpha, beta)


def gamma_q(q: float) -> float:
    """Ground state energy on the line at unit mass and unit strength."""
    return soliton_oracle(q, 1.0, 1.0).energy


def mu_star(sigma0: float, q: float) -> float:
    """Small-strength threshold ``(sigma0 / gamma_q) ** (3/2 - q/4)``."""
    if not 2 < q < 6:
        raise ExponentOutOfRange(f"q={q} outside (2, 6)")
    if sigma0 >= 0:
        raise NonNegativeSigma0(f"sigma0={sigma0} must be negative")
    return (sigma0 / gamma_q(q)) ** (1.5 - q / 4.0)
