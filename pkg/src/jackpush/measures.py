"""Jack measures, the multilevel Jack measure and the discrete beta-ensemble.

Exact weights are evaluated in log space; small-N measures are enumerated
over ``|lambda| <= M`` with a Poisson tail certificate on the omitted mass.
States of the beta-ensemble are always carried as integer partitions, the
``ell`` lattice being ``ell_i = lambda_{N-i+1} + theta * i``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .jack import (
    LogValue,
    gamma_ratio_f,
    log_dual_factor,
    log_gamma_ratio,
    log_J_plancherel,
    log_J_principal,
    log_skew_J_one,
)
from .partitions import (
    GTPattern,
    Partition,
    ell_coordinates,
    interlaces,
    iter_interlacing,
    iter_partitions,
    iter_patterns,
)

_LATTICE_TOL = 1e-6


class TailBoundExceeded(ValueError):
    def __init__(self, bound: float, tolerance: float):
        super().__init__(f"tail bound {bound:.3e} exceeds tolerance {tolerance:.3e}")
        self.bound = bound
        self.tolerance = tolerance


class LatticeProbe(ValueError):
    """Probe point too close to a lattice point of the support."""


@dataclass(frozen=True)
class JackMeasureSpec:
    N: int
    s: float
    theta: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        if self.theta <= 0:
            raise ValueError("theta must be positive")

    @property
    def mean_weight(self) -> float:
        """``E|lambda| = N theta s``."""
        return self.N * self.theta * self.s


def log_weight_jack(lam: Partition, spec: JackMeasureSpec) -> LogValue:
    """``J_{1^N; r_s}(lam) = e^{-theta s N} J_lam(1^N) J~_lam(r_s)``."""
    N, s, theta = spec.N, spec.s, spec.theta
    w = log_J_principal(lam, N, 1.0, theta) * log_J_plancherel(lam, s, theta) * log_dual_factor(lam, theta)
    return w * LogValue(-theta * s * N, 1)


def log_branch_f(lam: Partition, mu: Partition, theta: float) -> LogValue:
    """``J_{lam/mu}(1^1)`` through the ``f = Gamma(z+1)/Gamma(z+theta)`` chain.

    Independent of :func:`jackpush.jack.log_skew_J_one`, which uses Pochhammer
    symbols; the two are compared in the tests.
    """
    if not interlaces(mu, lam):
        return LogValue.zero()
    k = max(len(lam), len(mu) + 1, 1)
    out = LogValue.one()
    for i in range(1, k):
        for j in range(i, k):
            c = theta * (j - i)
            out = out * gamma_ratio_f(mu.row(i) - mu.row(j) + c, theta)
            out = out * gamma_ratio_f(lam.row(i) - lam.row(j + 1) + c, theta)
            out = out / gamma_ratio_f(mu.row(i) - lam.row(j + 1) + c, theta)
            out = out / gamma_ratio_f(lam.row(i) - mu.row(j) + c, theta)
    return out


def log_weight_multilevel(p: GTPattern, s: float, theta: float) -> LogValue:
    """Multilevel Jack measure of the pattern ``lambda^n < ... < lambda^N``."""
    n, N = p.base_level, p.top_level
    top = p.level(N)
    w = LogValue(-theta * s * N, 1) * log_J_plancherel(top, s, theta) * log_dual_factor(top, theta)
    w = w * log_J_principal(p.level(n), n, 1.0, theta)
    for k in range(n + 1, N + 1):
        w = w * log_branch_f(p.level(k), p.level(k - 1), theta)
    return w


def cotransition_pmf(lam: Partition, k: int, theta: float) -> dict[Partition, float]:
    """``p_down(lam -> mu) = J_mu(1^{k-1}) J_{lam/mu}(1^1) / J_lam(1^k)``."""
    if k < max(len(lam), 1):
        raise ValueError(f"{lam} has more than k={k} parts")
    return dict(_cotransition(lam, k, theta))


@lru_cache(maxsize=200_000)
def _cotransition(lam: Partition, k: int, theta: float) -> tuple[tuple[Partition, float], ...]:
    norm = log_J_principal(lam, k, 1.0, theta)
    out = []
    for mu in iter_interlacing(lam, k - 1):
        w = log_J_principal(mu, k - 1, 1.0, theta) * log_skew_J_one(lam, mu, 1.0, theta) / norm
        if not w.is_zero:
            out.append((mu, float(w)))
    return tuple(out)


@dataclass
class EnumeratedMeasure:
    """Truncated, renormalized measure on a finite list of states."""

    states: list
    probs: np.ndarray
    tail_bound: float
    index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if not self.index:
            self.index = {_key(st): i for i, st in enumerate(self.states)}

    def prob(self, state) -> float:
        i = self.index.get(_key(state))
        return 0.0 if i is None else float(self.probs[i])

    def expect(self, g: Callable) -> float:
        return float(sum(p * g(st) for st, p in zip(self.states, self.probs)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "states": [_state_to_json(st) for st in self.states],
                "probs": [float(p) for p in self.probs],
                "tail_bound": float(self.tail_bound),
            }
        )

    @classmethod
    def from_json(cls, text: str, base_level: int = 1) -> "EnumeratedMeasure":
        d = json.loads(text)
        states = [_state_from_json(st, base_level) for st in d["states"]]
        return cls(states, np.array(d["probs"]), float(d["tail_bound"]))


def _key(state):
    return state.as_key() if isinstance(state, GTPattern) else state


def _state_to_json(st):
    if isinstance(st, GTPattern):
        return [list(r) for r in st.rows]
    return list(st)


def _state_from_json(st, base_level):
    if st and isinstance(st[0], list):
        return GTPattern(base_level, [Partition(r) for r in st])
    return Partition(st)


def poisson_tail(M: int, spec: JackMeasureSpec) -> float:
    """``P(|lambda| > M)``; ``|lambda|`` is Poisson(``N theta s``) under the Jack measure."""
    mu = spec.mean_weight
    return 0.0 if mu == 0 else float(poisson.sf(M, mu))


def cutoff_for(spec: JackMeasureSpec, tolerance: float) -> int:
    """Smallest ``M`` whose Poisson tail is at most ``tolerance``."""
    M = 0
    while poisson_tail(M, spec) > tolerance:
        M += 1
    return M


def _normalize(log_w: list[float]) -> np.ndarray:
    a = np.array(log_w)
    a = np.exp(a - a.max())
    return a / a.sum()


def enumerate_jack(spec: JackMeasureSpec, M: int, tolerance: float | None = None) -> EnumeratedMeasure:
    """Jack measure restricted to ``|lambda| <= M``."""
    tail = poisson_tail(M, spec)
    if tolerance is not None and tail > tolerance:
        raise TailBoundExceeded(tail, tolerance)
    states, logs = [], []
    for lam in iter_partitions(spec.N, M):
        w = log_weight_jack(lam, spec)
        if not w.is_zero:
            states.append(lam)
            logs.append(w.log_abs)
    return EnumeratedMeasure(states, _normalize(logs), tail)


def enumerate_multilevel(
    n: int, spec: JackMeasureSpec, M: int, tolerance: float | None = None
) -> EnumeratedMeasure:
    """Multilevel measure on patterns of levels ``n..N`` with ``|lambda^N| <= M``."""
    tail = poisson_tail(M, spec)
    if tolerance is not None and tail > tolerance:
        raise TailBoundExceeded(tail, tolerance)
    states, logs = [], []
    for p in iter_patterns(n, spec.N, M):
        w = log_weight_multilevel(p, spec.s, spec.theta)
        if not w.is_zero:
            states.append(p)
            logs.append(w.log_abs)
    return EnumeratedMeasure(states, _normalize(logs), tail)


@lru_cache(maxsize=64)
def _top_row_sampler(spec: JackMeasureSpec) -> tuple[list[Partition], np.ndarray]:
    em = enumerate_jack(spec, cutoff_for(spec, 1e-13))
    return em.states, np.cumsum(em.probs)


def sample_multilevel_fixed_time(spec: JackMeasureSpec, rng: np.random.Generator, n: int = 1) -> GTPattern:
    """Exact draw from the multilevel Jack measure: top row by inversion, then Gibbs down-sampling."""
    if spec.s == 0:
        return GTPattern.empty(n, spec.N)
    states, cdf = _top_row_sampler(spec)
    top = states[min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(states) - 1)]
    rows = [top]
    for k in range(spec.N, n, -1):
        pairs = _cotransition(rows[-1], k, spec.theta)
        u = rng.random()
        acc = 0.0
        choice = pairs[-1][0]
        for mu, pr in pairs:
            acc += pr
            if u < acc:
                choice = mu
                break
        rows.append(choice)
    return GTPattern(n, list(reversed(rows)))


def conditional_gap_pmf(ell: Sequence[float], m: Sequence[float], theta: float) -> np.ndarray:
    """Law of ``z = ell_N - m_{N-1} - theta`` given ``ell`` and ``m_1..m_{N-2}``.

    Entry ``k`` of the result is ``P(z = k)`` for ``0 <= k <= ell_N - ell_{N-1} - theta``.
    """
    N = len(ell)
    if N < 2 or len(m) != N - 2:
        raise ValueError("need N >= 2 top coordinates and N-2 lower ones")
    K = round(ell[-1] - ell[-2] - theta)
    if K < 0:
        raise ValueError("empty support")
    L = ell[-1]
    logs = []
    for k in range(K + 1):
        w = log_gamma_ratio([theta + k], [1.0 + k])
        for mi in m:
            w = w * LogValue.from_float(L - mi - k - theta)
        w = w * log_gamma_ratio([L - li - k for li in ell[:-1]], [L - li - k + 1 - theta for li in ell[:-1]])
        logs.append(w)
    if all(w.is_zero for w in logs):
        raise ValueError("empty support")
    if any(w.sign < 0 for w in logs):
        raise ValueError("configuration is not admissible")
    top = max(w.log_abs for w in logs if not w.is_zero)
    probs = np.array([0.0 if w.is_zero else math.exp(w.log_abs - top) for w in logs])
    return probs / probs.sum()


def gap_ratio_closed(ell: Sequence[float], m: Sequence[float], k: int, theta: float) -> float:
    """``f_N(k) / f_N(0)`` in product form, with ``f(z) = Gamma(z+1)/Gamma(z+theta)``:

    ``Gamma(theta+k)/(k! Gamma(theta)) prod_i (1 - k/(ell_N - m_i - theta))
    prod_i f(ell_N - ell_i - theta) / f(ell_N - ell_i - k - theta)``.

    Zero outside the support ``k <= ell_N - ell_{N-1} - theta``.
    """
    ell = np.asarray(ell, dtype=float)
    m = np.asarray(m, dtype=float)
    if k < 0 or k > round(ell[-1] - ell[-2] - theta):
        return 0.0
    L = ell[-1]
    d = L - ell[:-1] - theta
    log_f = lambda z: gammaln(z + 1) - gammaln(z + theta)
    out = gammaln(theta + k) - gammaln(k + 1.0) - gammaln(theta)
    out += np.sum(np.log1p(-k / (L - m - theta)))
    out += np.sum(log_f(d) - log_f(d - k))
    return float(np.exp(out))


def partition_from_ell(ell: Sequence[float], theta: float) -> Partition:
    """Inverse of :func:`ell_coordinates`; raises on a malformed state."""
    N = len(ell)
    raw = [ell[i - 1] - theta * i for i in range(1, N + 1)]
    parts = [round(v) for v in raw]
    if any(abs(v - r) > _LATTICE_TOL for v, r in zip(raw, parts)):
        raise ValueError(f"{tuple(ell)} is off the theta-shifted lattice")
    try:
        return Partition(reversed(parts))
    except ValueError as e:
        raise ValueError(f"{tuple(ell)} is not an admissible state: {e}") from None


def log_weight_beta_ensemble(state: Partition | Sequence[float], N: int, s: float, theta: float) -> LogValue:
    """Discrete beta-ensemble weight of ``ell`` (or of the partition it encodes).

    ``Gamma(theta)^N e^{-s theta N} (s theta)^{-theta N(N+1)/2} / prod Gamma(i theta)
    * prod_{i<j} Gamma(d+1) Gamma(d+theta) / (Gamma(d) Gamma(d+1-theta))
    * prod_i (s theta)^{ell_i} / Gamma(ell_i + 1 - theta)`` with ``d = ell_j - ell_i``.
    """
    lam = state if isinstance(state, Partition) else partition_from_ell(state, theta)
    if len(lam) > N:
        raise ValueError(f"{lam} has more than N={N} parts")
    if s == 0:
        return LogValue.one() if lam.weight == 0 else LogValue.zero()
    ell = ell_coordinates(lam, N, theta)
    lst = math.log(s * theta)
    total = N * math.lgamma(theta) - s * theta * N - theta * N * (N + 1) / 2 * lst
    total -= sum(math.lgamma(i * theta) for i in range(1, N + 1))
    for i in range(N):
        for j in range(i + 1, N):
            d = ell[j] - ell[i]
            total += math.lgamma(d + 1) + math.lgamma(d + theta) - math.lgamma(d) - math.lgamma(d + 1 - theta)
    for x in ell:
        total += x * lst - math.lgamma(x + 1 - theta)
    return LogValue(total, 1)


def _ell_matrix(em: EnumeratedMeasure, N: int, theta: float) -> np.ndarray:
    return np.array([ell_coordinates(lam, N, theta) for lam in em.states])


def nekrasov_R(xi: float, N: int, s: float, theta: float, em: EnumeratedMeasure) -> float:
    """``(xi - theta) E[prod(1 - theta/(xi - ell_i))] + s theta E[prod(1 + theta/(xi - ell_i - 1))]``.

    A degree-one polynomial in ``xi`` for the Jack measure with parameters ``(N, s, theta)``.
    """
    ell = _ell_matrix(em, N, theta)
    if np.min(np.abs(xi - ell)) < _LATTICE_TOL or np.min(np.abs(xi - ell - 1)) < _LATTICE_TOL:
        raise LatticeProbe(f"xi={xi} is on the support lattice")
    a = np.prod(1 - theta / (xi - ell), axis=1)
    b = np.prod(1 + theta / (xi - ell - 1), axis=1)
    return float((xi - theta) * (em.probs @ a) + s * theta * (em.probs @ b))


def log_Delta(x: float, ell_lower: Sequence[float], theta: float) -> LogValue:
    """``prod_j Gamma(x-l_j+1) Gamma(x-l_j+theta) / (Gamma(x-l_j+1-theta) Gamma(x-l_j))``."""
    num, den = [], []
    for lj in ell_lower:
        y = x - lj
        num += [y + 1, y + theta]
        den += [y + 1 - theta, y]
    return log_gamma_ratio(num, den)


def delta_ratios(ell: np.ndarray, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-state ``Delta(ell_N - 1)/Delta(ell_N)`` and ``Delta(ell_N + 1)/Delta(ell_N)``."""
    y = ell[:, -1:] - ell[:, :-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        down = np.prod((y - 1) * (y - theta) / (y * (y + theta - 1)), axis=1)
    up = np.prod((y + 1) * (y + theta) / (y * (y + 1 - theta)), axis=1)
    # for theta < 1 an adjacent pair makes the closed form 0/0; resolve through residues
    for r in np.flatnonzero(~np.isfinite(down)):
        x = ell[r, -1]
        down[r] = float(log_Delta_ratio(x - 1, x, ell[r, :-1], theta))
    return down, up


def log_Delta_ratio(x1: float, x0: float, ell_lower: Sequence[float], theta: float) -> LogValue:
    """``Delta(x1) / Delta(x0)`` with poles cancelled jointly."""
    num, den = [], []
    for x, (a, b) in ((x1, (num, den)), (x0, (den, num))):
        for lj in ell_lower:
            y = x - lj
            a += [y + 1, y + theta]
            b += [y + 1 - theta, y]
    return log_gamma_ratio(num, den)


def edge_shift_check(N: int, s: float, theta: float, em: EnumeratedMeasure) -> tuple[float, float]:
    """Residuals of the two edge identities

    ``E[Delta(ell_N-1)/Delta(ell_N)] = E[s theta/(ell_N + 1 - theta)]`` and
    ``E[Delta(ell_N+1)/Delta(ell_N)] = E[(ell_N - theta)/(s theta) 1{lambda_1 > lambda_2}]``.
    """
    if N < 2:
        raise ValueError("the edge identities need N >= 2")
    ell = _ell_matrix(em, N, theta)
    down, up = delta_ratios(ell, theta)
    top = ell[:, -1]
    free = np.array([lam.row(1) > lam.row(2) for lam in em.states], dtype=float)
    st = s * theta
    r1 = abs(em.probs @ down - em.probs @ (st / (top + 1 - theta)))
    r2 = abs(em.probs @ up - em.probs @ ((top - theta) / st * free))
    return float(r1), float(r2)
