"""Continuous-time multilevel Jack process with push-block dynamics.

The process ``X^multi_{n,N}`` lives on patterns ``lambda^n < ... < lambda^N``.
Level ``n`` evolves on its own as the single-level chain, every higher
particle carries the push-block rate of its level and the level below, and a
jump moves the maximal equal string above the ringing particle.

The pure-Python ``rate_*`` functions are reference evaluations; simulation
runs through the compiled kernels in :mod:`jackpush._kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as K
from .jack import log_J_principal, log_skew_J_one, log_skew_J_single_box_dual
from .partitions import GTPattern, InvalidBox, Partition, box_stats, conjugate, interlaces
from .rng import rng_metadata, trial_rng


class BlockedJump(RuntimeError):
    pass


def _parts(lam: Partition, n: int) -> list[int]:
    """1-based padded parts with a dummy slot 0."""
    return [0] + list(lam.padded(n))


def rate_full_array(p: GTPattern, j: int, i: int, theta: float) -> float:
    """Push-block rate of particle ``(j, i)`` for a pattern based at level 1."""
    if not 1 <= i <= j:
        raise IndexError((j, i))
    U = _parts(p.level(j), j)
    D = _parts(p.level(j - 1), j - 1) if j > 1 else [0]
    if i >= 2 and D[i - 1] == U[i]:
        return 0.0
    th = theta
    log_r = math.log(th)
    for r in range(1, i):
        d = U[r] - U[i] - 1
        log_r += math.log(d + th * (i - r + 1)) - math.log(d + 1 + th * (i - r))
        d = D[r] - U[i]
        log_r += math.log(d + th * (i - r - 1)) - math.log(d - 1 + th * (i - r))
    for m in range(i, j):
        d = U[i] - U[m + 1]
        log_r += math.log(d + 1 + th * (m - i)) - math.log(d + th * (m - i + 1))
        d = U[i] - D[m]
        log_r += math.log(d + th * (m - i + 1)) - math.log(d + 1 + th * (m - i))
    return math.exp(log_r)


def rate_bottom_level(lam: Partition, i: int, n: int, theta: float) -> float:
    """Rate of adding the box ``(i, lam_i + 1)`` in the single-level chain on ``Y^n``."""
    if i < 1 or i > n or (i > 1 and lam.row(i - 1) == lam.row(i)):
        return 0.0
    mu = lam.add_box(i)
    log_r = _log_box_product(mu, n, theta) - _log_box_product(lam, n, theta)
    j = lam.row(i) + 1
    log_r += math.log(theta)
    for k in range(1, i):
        arm = lam.row(k) - j
        log_r += math.log(arm + theta * (i - k + 1)) - math.log(arm + theta * (i - k))
        log_r += math.log(arm + 1 + theta * (i - k - 1)) - math.log(arm + 1 + theta * (i - k))
    return math.exp(log_r)


def _log_box_product(lam: Partition, n: int, theta: float) -> float:
    conj = conjugate(lam)
    s = 0.0
    for a, b in lam.boxes():
        st = box_stats(lam, a, b, conj)
        s += math.log(n * theta + st.coarm - theta * st.coleg) - math.log(st.arm + theta * st.leg + theta)
    return s


def rate_bottom_closed(lam: Partition, i: int, n: int, theta: float) -> float:
    """Same rate as :func:`rate_bottom_level` in interaction form:
    ``theta * prod_{m != i} (1 + theta / (y_i - y_m))`` with ``y_m = lam_m - theta m``."""
    if i < 1 or i > n or (i > 1 and lam.row(i - 1) == lam.row(i)):
        return 0.0
    y = [lam.row(m) - theta * m for m in range(1, n + 1)]
    r = theta
    for m in range(n):
        if m != i - 1:
            r *= 1 + theta / (y[i - 1] - y[m])
    return r


def rate_generator_ratio(p: GTPattern, j: int, i: int, theta: float) -> float:
    """Rate of ``(j, i)`` read off the generator: single-box dual skew factor
    times the ratio of the branching (or bottom principal) weights."""
    lam = p.level(j)
    try:
        mu = lam.add_box(i)
    except InvalidBox:
        return 0.0
    if len(mu) > j:
        return 0.0
    box = log_skew_J_single_box_dual(lam, i, theta)
    if j == p.base_level:
        ratio = log_J_principal(mu, j, 1.0, theta) / log_J_principal(lam, j, 1.0, theta)
    else:
        lower = p.level(j - 1)
        if not interlaces(lower, mu):
            return 0.0
        ratio = log_skew_J_one(mu, lower, 1.0, theta) / log_skew_J_one(lam, lower, 1.0, theta)
    return float(box * ratio)


def top_rate_observable(lam: Partition, N: int, theta: float) -> float:
    """Rate of the rightmost particle of the single-level chain on ``Y^N``."""
    r = theta
    for i in range(2, N + 1):
        r *= 1 + theta / (lam.row(1) - lam.row(i) + theta * (i - 1))
    return r


@dataclass
class JumpEvent:
    time: float
    level: int
    index: int
    push_extent: int


@dataclass
class SimState:
    """Mutable simulation state of ``X^multi_{n,N}``."""

    n: int
    N: int
    theta: float
    lam: np.ndarray = field(repr=False)
    prod: np.ndarray = field(repr=False)
    rate: np.ndarray = field(repr=False)
    tot: np.ndarray = field(repr=False)
    sc: np.ndarray = field(repr=False)
    ic: np.ndarray = field(repr=False)

    @classmethod
    def initial(cls, n: int, N: int, theta: float) -> "SimState":
        if not 1 <= n <= N:
            raise ValueError("need 1 <= n <= N")
        if theta <= 0:
            raise ValueError("theta must be positive")
        lam, prod, rate, tot, sc, ic = K.new_arrays(n, N)
        sc[1] = math.nan
        K.full_recompute(lam, prod, rate, tot, n, float(theta))
        return cls(n, N, float(theta), lam, prod, rate, tot, sc, ic)

    @classmethod
    def from_pattern(cls, p: GTPattern, theta: float) -> "SimState":
        st = cls.initial(p.base_level, p.top_level, theta)
        for l, row in enumerate(p.rows):
            st.lam[l, 1 : p.base_level + l + 1] = row.padded(p.base_level + l)
        st.recompute()
        return st

    @property
    def clock(self) -> float:
        return float(self.sc[0])

    @property
    def event_count(self) -> int:
        return int(self.ic[0])

    @property
    def pattern(self) -> GTPattern:
        return pattern_from_array(self.lam, self.n)

    @property
    def total_rate(self) -> float:
        return float(self.tot.sum())

    def rate_of(self, level: int, index: int) -> float:
        return float(self.rate[level - self.n, index])

    @property
    def rate_cache(self) -> dict[tuple[int, int], float]:
        return {
            (self.n + l, i): float(self.rate[l, i])
            for l in range(self.N - self.n + 1)
            for i in range(1, self.n + l + 1)
        }

    def recompute(self) -> None:
        K.full_recompute(self.lam, self.prod, self.rate, self.tot, self.n, self.theta)

    def copy(self) -> "SimState":
        return SimState(
            self.n, self.N, self.theta,
            self.lam.copy(), self.prod.copy(), self.rate.copy(),
            self.tot.copy(), self.sc.copy(), self.ic.copy(),
        )


def pattern_from_array(lam: np.ndarray, n: int) -> GTPattern:
    return GTPattern(n, [Partition(lam[l, 1 : n + l + 1]) for l in range(lam.shape[0])])


def apply_jump(state: SimState, B: int, k: int) -> SimState:
    """Jump of particle ``(B, k)`` with the maximal push; mutates and returns ``state``."""
    l = B - state.n
    if not (0 <= l < state.lam.shape[0] and 1 <= k <= B) or state.rate[l, k] <= 0:
        raise BlockedJump(f"particle ({B},{k}) cannot jump")
    K.apply_jump(state.lam, state.prod, state.rate, state.tot, l, k, state.n, state.theta)
    return state


def step(state: SimState, rng: np.random.Generator) -> tuple[SimState, JumpEvent]:
    """One Gillespie event."""
    if math.isnan(state.sc[1]):
        state.sc[1] = state.sc[0] + rng.exponential(1.0 / state.total_rate)
    l, k, c = K.one_event(state.lam, state.prod, state.rate, state.tot, state.n, state.theta, rng, state.sc, state.ic)
    return state, JumpEvent(float(state.sc[0]), state.n + int(l), int(k), int(c))


def _started(n: int, N: int, theta: float, rng: np.random.Generator) -> SimState:
    st = SimState.initial(n, N, theta)
    K.start(st.lam, st.prod, st.rate, st.tot, st.n, st.theta, rng, st.sc, st.ic)
    return st


def advance(state: SimState, rng: np.random.Generator, t_end: float) -> SimState:
    if t_end < state.clock:
        raise ValueError("cannot advance backwards")
    if math.isnan(state.sc[1]):
        K.start(state.lam, state.prod, state.rate, state.tot, state.n, state.theta, rng, state.sc, state.ic)
    K.advance(state.lam, state.prod, state.rate, state.tot, state.n, state.theta, rng, state.sc, state.ic, float(t_end))
    return state


def simulate(
    n: int, N: int, theta: float, observation_times: Sequence[float], seed: int,
    trial: int = 0, namespace: str | int | None = None,
) -> list[GTPattern]:
    """Snapshots of ``X^multi_{n,N}`` at the requested times, started empty."""
    times = list(observation_times)
    if any(t < 0 for t in times) or times != sorted(times):
        raise ValueError("observation times must be sorted and nonnegative")
    rng = trial_rng(seed, trial, namespace)
    st = _started(n, N, theta, rng)
    out = []
    for t in times:
        advance(st, rng, t)
        out.append(st.pattern)
    return out


def simulate_arrays(
    n: int, N: int, theta: float, observation_times: Sequence[float], seed: int,
    trial: int = 0, namespace: str | int | None = None,
) -> list[np.ndarray]:
    """Like :func:`simulate` but returns raw ``lam`` arrays (faster for batch runs)."""
    rng = trial_rng(seed, trial, namespace)
    st = _started(n, N, theta, rng)
    out = []
    for t in observation_times:
        advance(st, rng, t)
        out.append(st.lam.copy())
    return out


def iter_events(
    n: int, N: int, theta: float, horizon: float, seed: int, trial: int = 0,
    namespace: str | int | None = None,
) -> Iterator[tuple[JumpEvent, list[tuple[int, int, int]]]]:
    """Events up to ``horizon`` with the moved coordinates ``(level, index, new value)``."""
    rng = trial_rng(seed, trial, namespace)
    st = _started(n, N, theta, rng)
    while st.sc[1] <= horizon:
        st, ev = step(st, rng)
        moved = [
            (lev, ev.index, int(st.lam[lev - n, ev.index]))
            for lev in range(ev.level, ev.level + ev.push_extent + 1)
        ]
        yield ev, moved


@dataclass
class GapPath:
    """Top gaps ``Q_j = X^{N-j+1}_1 - X^{N-j}_1`` on ``[t0, t0 + T]``.

    ``times[0] == t0`` holds the initial values; later rows are jump times.
    ``levels`` holds ``lambda^{N-k}, ..., lambda^N`` at ``t0`` (row ``l`` is
    level ``N-k+l``, zero padded to ``N`` entries); ``top_row`` is its last row.
    """

    t0: float
    T: float
    times: np.ndarray
    gaps: np.ndarray
    levels: np.ndarray
    event_count: int = 0

    @property
    def top_row(self) -> np.ndarray:
        return self.levels[-1]

    def at(self, s: float) -> np.ndarray:
        """Gap values at time ``t0 + s`` (right-continuous)."""
        idx = int(np.searchsorted(self.times, self.t0 + s, side="right")) - 1
        return self.gaps[max(idx, 0)]


def simulate_top_rows(
    N: int, k: int, theta: float, t: float, T: float, seed: int,
    trial: int = 0, namespace: str | int | None = None, s: float = 0.0,
) -> GapPath:
    """Simulate levels ``N-k..N`` up to ``tN + s + T`` and return the gap path after ``tN + s``."""
    if not 0 <= k < N:
        raise ValueError("need 0 <= k < N")
    rng = trial_rng(seed, trial, namespace)
    st = _started(N - k, N, theta, rng)
    t0 = t * N + s
    advance(st, rng, t0)
    L = k + 1
    first = [st.lam[L - j, 1] - st.lam[L - j - 1, 1] for j in range(1, k + 1)]
    levels = st.lam[:, 1 : N + 1].copy()
    cap = max(64, int(4 * theta * N * max(T, 0.0)) + 64)
    times = np.empty(cap)
    gaps = np.empty((cap, max(k, 1)), dtype=np.int64)
    times[0] = t0
    gaps[0, :k] = first
    idx = 1
    t_end = t0 + T
    while True:
        idx = K.advance_recording_gaps(
            st.lam, st.prod, st.rate, st.tot, st.n, st.theta, rng, st.sc, st.ic, t_end, k, times, gaps, idx
        )
        if st.sc[0] >= t_end:
            break
        times = np.concatenate([times, np.empty(cap)])
        gaps = np.concatenate([gaps, np.empty((cap, gaps.shape[1]), dtype=np.int64)])
    return GapPath(t0, T, times[:idx].copy(), gaps[:idx, :k].copy(), levels, st.event_count)


def run_metadata(n: int, N: int, theta: float, seed: int, event_count: int, namespace=None) -> dict:
    meta = {"n": n, "N": N, "theta": theta, "event_count": event_count}
    meta.update(rng_metadata(seed, namespace))
    return meta
