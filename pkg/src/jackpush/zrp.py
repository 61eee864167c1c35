"""Zero range process on ``k`` piles with a source at location 0 and a sink.

Pile ``i`` rings at rate ``theta (theta + Q_i) / (1 + Q_i)`` and pulls a
particle from the nearest non-empty pile to its left; the source is always
non-empty. The sink rings at the constant rate ``theta (1 + sqrt t) / sqrt t``
and removes a particle from the rightmost non-empty pile. When every pile is
empty the sink ring is a no-op event.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .asymptotics import NbParams
from .rng import trial_rng

SINK = -1


@dataclass
class ZrpState:
    piles: np.ndarray
    clock: float = 0.0

    def __post_init__(self):
        self.piles = np.asarray(self.piles, dtype=np.int64).copy()
        if self.piles.ndim != 1 or (self.piles < 0).any():
            raise ValueError("piles must be a 1-d array of nonnegative integers")

    @property
    def k(self) -> int:
        return len(self.piles)


def sink_rate(theta: float, t: float) -> float:
    r = math.sqrt(t)
    return theta * (1 + r) / r


def zrp_rates(state: ZrpState, theta: float, t: float) -> np.ndarray:
    """Rates of piles ``1..k`` followed by the sink rate."""
    if t <= 0 or theta <= 0:
        raise ValueError("t and theta must be positive")
    q = state.piles.astype(float)
    return np.append(theta * (theta + q) / (1 + q), sink_rate(theta, t))


def zrp_apply(state: ZrpState, ringing: int) -> ZrpState:
    """Pile ``ringing`` (1-based) or :data:`SINK` fires; returns a new state."""
    q = state.piles.copy()
    k = len(q)
    if ringing == SINK:
        j = k
    elif 1 <= ringing <= k:
        j = ringing - 1
    else:
        raise ValueError(f"invalid clock {ringing}")
    while j >= 1 and q[j - 1] == 0:
        j -= 1
    if j >= 1:
        q[j - 1] -= 1
    if ringing != SINK:
        q[ringing - 1] += 1
    return ZrpState(q, state.clock)


def sample_stationary_init(k: int, theta: float, t: float, rng: np.random.Generator) -> ZrpState:
    """i.i.d. negative binomial piles with ``p = sqrt t / (1 + sqrt t)``."""
    p = NbParams.from_t(theta, t).p
    return ZrpState(rng.negative_binomial(theta, 1 - p, size=k))


@njit(cache=True, error_model="numpy")
def _run(q, theta, sink, t_end, rng, obs_times, obs, counts, rec_t, rec_q, rec_n):
    """Gillespie loop from time 0. Snapshots at ``obs_times`` go to ``obs``;
    ``counts[i]`` counts arrivals into pile ``i``. Event rows are written to
    ``rec_*`` while capacity lasts; returns the number of events."""
    k = q.shape[0]
    rates = np.empty(k + 1)
    clock = 0.0
    events = 0
    o = 0
    n_obs = obs_times.shape[0]
    cap = rec_t.shape[0]
    while True:
        total = sink
        for i in range(k):
            rates[i] = theta * (theta + q[i]) / (1.0 + q[i])
            total += rates[i]
        rates[k] = sink
        nxt = clock - math.log(1.0 - rng.random()) / total
        while o < n_obs and obs_times[o] < nxt and obs_times[o] <= t_end:
            obs[o, :] = q
            o += 1
        if nxt > t_end:
            break
        clock = nxt
        u = rng.random() * total
        c = 0
        while c < k and u >= rates[c]:
            u -= rates[c]
            c += 1
        j = k if c == k else c
        while j >= 1 and q[j - 1] == 0:
            j -= 1
        if j >= 1:
            q[j - 1] -= 1
        if c < k:
            q[c] += 1
            counts[c] += 1
        if rec_n < cap:
            rec_t[rec_n] = clock
            rec_q[rec_n, :] = q
            rec_n += 1
        events += 1
    return events, rec_n


@dataclass
class ZrpPath:
    """Piles after each event; row 0 is the initial state at time 0."""

    times: np.ndarray
    piles: np.ndarray
    horizon: float
    arrivals: np.ndarray
    snapshots: np.ndarray = field(default_factory=lambda: np.empty((0, 0), dtype=np.int64))

    def at(self, s: float) -> np.ndarray:
        return self.piles[np.searchsorted(self.times, s, side="right") - 1]


def simulate_zrp(
    k: int,
    theta: float,
    t: float,
    horizon: float,
    seed: int,
    init: str | np.ndarray = "stationary",
    trial: int = 0,
    namespace: str | int | None = None,
    observation_times=(),
    record: bool = True,
) -> ZrpPath:
    """Exact path of the pile process on ``[0, horizon]``.

    ``init`` is ``"stationary"`` or an explicit pile vector. With
    ``record=False`` only arrival counts and snapshots are kept.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if t <= 0 or theta <= 0:
        raise ValueError("t and theta must be positive")
    if isinstance(init, str):
        if init != "stationary":
            raise ValueError("init must be 'stationary' or a pile vector")
    elif len(ZrpState(init).piles) != k:
        raise ValueError("init has the wrong number of piles")
    obs_times = np.asarray(sorted(observation_times), dtype=float)
    obs = np.zeros((len(obs_times), k), dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    cap = int(4 * (theta * max(theta, 1.0) * k + sink_rate(theta, t)) * horizon) + 64 if record else 0
    while True:
        # an overflowing path is replayed from a fresh stream with a larger
        # buffer, so the result does not depend on the buffer size
        rng = trial_rng(seed, trial, namespace)
        q0 = sample_stationary_init(k, theta, t, rng).piles if isinstance(init, str) else ZrpState(init).piles
        rec_t = np.empty(cap)
        rec_q = np.empty((cap, k), dtype=np.int64)
        counts[:] = 0
        events, n = _run(q0.copy(), theta, sink_rate(theta, t), float(horizon), rng, obs_times, obs, counts, rec_t, rec_q, 0)
        if not record or n == events:
            break
        cap = 2 * events + 64
    times = np.concatenate([[0.0], rec_t[:n]])
    piles = np.vstack([q0[None, :], rec_q[:n]])
    return ZrpPath(times, piles, float(horizon), counts, obs)


def path_rows(path: ZrpPath):
    """``(time, pile_1, ..., pile_k)`` tuples for CSV output."""
    for tm, row in zip(path.times, path.piles):
        yield (float(tm), *(int(v) for v in row))
