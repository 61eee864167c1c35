"""Limiting objects: negative-binomial gaps, the equilibrium density and its
Stieltjes transform."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import nbinom


@dataclass(frozen=True)
class NbParams:
    theta: float
    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if self.theta <= 0:
            raise ValueError("theta must be positive")

    @classmethod
    def from_t(cls, theta: float, t: float) -> "NbParams":
        r = math.sqrt(t)
        return cls(theta, r / (1 + r))

    @property
    def mean(self) -> float:
        return self.theta * self.p / (1 - self.p)


def nb_pmf(n, params: NbParams):
    """``(1-p)^theta Gamma(n+theta) / (Gamma(n+1) Gamma(theta)) p^n``."""
    return nbinom.pmf(n, params.theta, 1 - params.p)


@dataclass(frozen=True)
class EquilibriumSpec:
    t: float
    theta: float

    def __post_init__(self):
        if self.t <= 0 or self.theta <= 0:
            raise ValueError("t and theta must be positive")

    @property
    def lower_edge(self) -> float:
        return self.theta * (math.sqrt(self.t) - 1) ** 2


def edge_b(spec: EquilibriumSpec) -> float:
    return spec.theta * (1 + math.sqrt(spec.t)) ** 2


def density(x, spec: EquilibriumSpec):
    """Equilibrium density; vectorized over ``x``.

    The arccot branch maps onto ``(0, pi)``, written as ``atan2(sqrt(disc), u)``
    so that the edges and the flat part ``theta^{-1}`` (for ``t < 1``) come out
    of the same expression.
    """
    th, t = spec.theta, spec.t
    x = np.asarray(x, dtype=float)
    u = x + th * (t - 1)
    disc = np.maximum(4 * th * t * x - u * u, 0.0)
    f = np.arctan2(np.sqrt(disc), u) / (th * math.pi)
    f = np.where((x < 0) | (x > edge_b(spec)), 0.0, f)
    return f if f.ndim else float(f)


def stieltjes_exp(z: complex, spec: EquilibriumSpec) -> complex:
    """``exp(theta G(z))`` off the support ``[0, b_t]``.

    The square root is taken as ``sqrt(z - a) sqrt(z - b)`` (principal
    branches, ``a, b = theta (sqrt t -+ 1)^2``), analytic off ``[a, b]`` and
    asymptotic to ``z``, so the value tends to 1 at infinity. The value is
    the root of ``t theta E^2 - (z + theta(t-1)) E + z = 0`` that is small
    relative to ``z``; it is evaluated as ``2z / (z + theta(t-1) + r)`` to
    avoid cancellation at large ``|z|``.
    """
    th, t = spec.theta, spec.t
    z = complex(z)
    if z.imag == 0 and 0 <= z.real <= edge_b(spec):
        raise ValueError(f"z={z} lies on the support")
    a, b = spec.lower_edge, edge_b(spec)
    r = cmath.sqrt(z - a) * cmath.sqrt(z - b)
    return 2 * z / (z + th * (t - 1) + r)


def functional_residual(z: complex, spec: EquilibriumSpec) -> float:
    """``|z + theta(t-1) - z/E - t theta E|`` with ``E = exp(theta G(z))``."""
    E = stieltjes_exp(z, spec)
    return abs(z + spec.theta * (spec.t - 1) - z / E - spec.t * spec.theta * E)


def edge_gap_sum_limit(spec: EquilibriumSpec) -> float:
    """Limit of ``sum_j 1/(ell_N - ell_j)``: ``log(1 + t^{-1/2}) / theta``."""
    return math.log1p(1 / math.sqrt(spec.t)) / spec.theta


def density_table(spec: EquilibriumSpec, intervals: int) -> tuple[np.ndarray, np.ndarray]:
    """Density on ``intervals + 1`` equispaced points covering ``[0, b_t]``."""
    if intervals < 1:
        raise ValueError("need at least one interval")
    x = np.linspace(0.0, edge_b(spec), intervals + 1)
    return x, density(x, spec)
