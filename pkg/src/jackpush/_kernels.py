"""Compiled Gillespie kernels for the multilevel Jack process.

State layout (all arrays owned by the caller):

* ``lam[l, i]``: part ``i`` (1-based) of level ``n + l``; columns past the
  level are zero, column 0 is unused.
* ``prod[l, i]``: running product of the level-(l) rate factors of particle
  ``i``, each factor entering through ``g(v) = v if |v| > eps else 1`` on
  numerator and denominator separately. When the particle is not blocked
  every factor is positive and ``theta * prod`` is its rate.
* ``rate[l, i]`` and ``tot[l]``: current rates and per-level sums.
* ``sc = [clock, next_event_time]``, ``ic = [events, events_since_full]``.

Level 0 evolves autonomously (single-level chain, rate of row ``i`` is
``theta * prod_{m != i} (1 + theta / (y_i - y_m))`` with ``y_m = lam_m - theta m``);
levels ``l >= 1`` use the push-block rates, whose factors pair the
particle's own coordinate with one coordinate of its level or the level below.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

FULL_RECOMPUTE_EVERY = 10_000
_EPS = 1e-9


@njit(cache=True, inline="always", error_model="numpy")
def _g(v):
    return v if abs(v) > _EPS else 1.0


@njit(cache=True, inline="always", error_model="numpy")
def _bottom_factor(Ui, Um, i, m, th):
    return Ui - Um + th * (m - i + 1), Ui - Um + th * (m - i)


@njit(cache=True, inline="always", error_model="numpy")
def _same_level_factor(ui, ur, i, r, th):
    """Factor of particle ``i`` (value ``ui``) tied to same-level coordinate ``ur`` at ``r != i``."""
    if r < i:
        d = ur - ui - 1
        return d + th * (i - r + 1), d + 1 + th * (i - r)
    d = ui - ur
    return d + 1 + th * (r - 1 - i), d + th * (r - i)


@njit(cache=True, inline="always", error_model="numpy")
def _lower_level_factor(ui, dr, i, r, th):
    """Factor of particle ``i`` (value ``ui``) tied to lower-level coordinate ``dr`` at ``r``."""
    if r < i:
        d = dr - ui
        return d + th * (i - r - 1), d - 1 + th * (i - r)
    d = ui - dr
    return d + th * (r - i + 1), d + 1 + th * (r - i)


@njit(cache=True, inline="always", error_model="numpy")
def _ratio(a0, b0, a1, b1):
    return (_g(a1) * _g(b0)) / (_g(b1) * _g(a0))


@njit(cache=True, inline="always", error_model="numpy")
def _acc(s, sg, a, b):
    a = _g(a)
    b = _g(b)
    if a * b < 0:
        sg = -sg
    return s + math.log(abs(a)) - math.log(abs(b)), sg


@njit(cache=True, error_model="numpy")
def _full_product(lam, l, i, n, th):
    """Signed product of all factors of particle ``i`` on level ``l`` (summed in logs)."""
    j = n + l
    U = lam[l]
    s = 0.0
    sg = 1.0
    if l == 0:
        for m in range(1, j + 1):
            if m != i:
                a, b = _bottom_factor(U[i], U[m], i, m, th)
                s, sg = _acc(s, sg, a, b)
        return sg * math.exp(s)
    D = lam[l - 1]
    for r in range(1, j + 1):
        if r != i:
            a, b = _same_level_factor(U[i], U[r], i, r, th)
            s, sg = _acc(s, sg, a, b)
    for r in range(1, j):
        a, b = _lower_level_factor(U[i], D[r], i, r, th)
        s, sg = _acc(s, sg, a, b)
    return sg * math.exp(s)


@njit(cache=True, error_model="numpy")
def _blocked(lam, l, i):
    if i == 1:
        return False
    if l == 0:
        return lam[0, i - 1] == lam[0, i]
    return lam[l - 1, i - 1] == lam[l, i]


@njit(cache=True, error_model="numpy")
def _refresh_level_rates(lam, prod, rate, tot, l, n, th):
    j = n + l
    t = 0.0
    for i in range(1, j + 1):
        if _blocked(lam, l, i):
            rate[l, i] = 0.0
        else:
            rate[l, i] = th * prod[l, i]
            t += rate[l, i]
    tot[l] = t


@njit(cache=True, error_model="numpy")
def full_recompute(lam, prod, rate, tot, n, th):
    L = lam.shape[0]
    for l in range(L):
        for i in range(1, n + l + 1):
            prod[l, i] = _full_product(lam, l, i, n, th)
        _refresh_level_rates(lam, prod, rate, tot, l, n, th)


@njit(cache=True, error_model="numpy")
def _update_neighbours(lam, prod, l, k, old, new, n, th):
    """Rescale every factor that references coordinate ``lam[l, k]`` after it moved."""
    L = lam.shape[0]
    j = n + l
    U = lam[l]
    for i in range(1, j + 1):
        if i == k:
            continue
        if l == 0:
            a0, b0 = _bottom_factor(U[i], old, i, k, th)
            a1, b1 = _bottom_factor(U[i], new, i, k, th)
        else:
            a0, b0 = _same_level_factor(U[i], old, i, k, th)
            a1, b1 = _same_level_factor(U[i], new, i, k, th)
        prod[l, i] *= _ratio(a0, b0, a1, b1)
    if l + 1 < L:
        V = lam[l + 1]
        for i in range(1, j + 2):
            a0, b0 = _lower_level_factor(V[i], old, i, k, th)
            a1, b1 = _lower_level_factor(V[i], new, i, k, th)
            prod[l + 1, i] *= _ratio(a0, b0, a1, b1)


@njit(cache=True, error_model="numpy")
def _update_own(lam, prod, l, k, old, new, n, th):
    """Rescale the factors of particle ``(l, k)`` for its own move ``old -> new``."""
    j = n + l
    U = lam[l]
    ratio = 1.0
    if l == 0:
        for m in range(1, j + 1):
            if m != k:
                a0, b0 = _bottom_factor(old, U[m], k, m, th)
                a1, b1 = _bottom_factor(new, U[m], k, m, th)
                ratio *= _ratio(a0, b0, a1, b1)
    else:
        D = lam[l - 1]
        for r in range(1, j + 1):
            if r != k:
                a0, b0 = _same_level_factor(old, U[r], k, r, th)
                a1, b1 = _same_level_factor(new, U[r], k, r, th)
                ratio *= _ratio(a0, b0, a1, b1)
        for r in range(1, j):
            a0, b0 = _lower_level_factor(old, D[r], k, r, th)
            a1, b1 = _lower_level_factor(new, D[r], k, r, th)
            ratio *= _ratio(a0, b0, a1, b1)
    U[k] = new
    prod[l, k] *= ratio


@njit(cache=True, error_model="numpy")
def push_extent(lam, l, k):
    L = lam.shape[0]
    c = 0
    while l + c + 1 < L and lam[l + c + 1, k] == lam[l + c, k]:
        c += 1
    return c


@njit(cache=True, error_model="numpy")
def apply_jump(lam, prod, rate, tot, l, k, n, th):
    """Move the maximal string above ``(l, k)`` by one; returns the push extent ``C``."""
    L = lam.shape[0]
    c = push_extent(lam, l, k)
    # one coordinate at a time, bottom first: every factor references two
    # coordinates, so sequential single-coordinate rescaling stays exact
    for m in range(l, l + c + 1):
        old = lam[m, k]
        _update_own(lam, prod, m, k, old, old + 1, n, th)
        _update_neighbours(lam, prod, m, k, old, old + 1, n, th)
    for m in range(l, min(l + c + 2, L)):
        _refresh_level_rates(lam, prod, rate, tot, m, n, th)
    return c


@njit(cache=True, error_model="numpy")
def _choose(rate, tot, n, u):
    L = tot.shape[0]
    total = 0.0
    for l in range(L):
        total += tot[l]
    target = u * total
    last_l = -1
    for l in range(L):
        if tot[l] > 0:
            last_l = l
            if target < tot[l]:
                break
            target -= tot[l]
    l = last_l
    last_i = -1
    for i in range(1, n + l + 1):
        if rate[l, i] > 0:
            last_i = i
            if target < rate[l, i]:
                break
            target -= rate[l, i]
    return l, last_i


@njit(cache=True, error_model="numpy")
def _total(tot):
    s = 0.0
    for l in range(tot.shape[0]):
        s += tot[l]
    return s


@njit(cache=True, error_model="numpy")
def _draw_wait(rng, total):
    return -math.log(1.0 - rng.random()) / total


@njit(cache=True, error_model="numpy")
def one_event(lam, prod, rate, tot, n, th, rng, sc, ic):
    """Perform the event scheduled at ``sc[1]``; returns ``(l, k, C)``."""
    sc[0] = sc[1]
    l, k = _choose(rate, tot, n, rng.random())
    c = apply_jump(lam, prod, rate, tot, l, k, n, th)
    ic[0] += 1
    ic[1] += 1
    if ic[1] >= FULL_RECOMPUTE_EVERY:
        full_recompute(lam, prod, rate, tot, n, th)
        ic[1] = 0
    sc[1] = sc[0] + _draw_wait(rng, _total(tot))
    return l, k, c


@njit(cache=True, error_model="numpy")
def start(lam, prod, rate, tot, n, th, rng, sc, ic):
    full_recompute(lam, prod, rate, tot, n, th)
    sc[1] = sc[0] + _draw_wait(rng, _total(tot))


@njit(cache=True, error_model="numpy")
def advance(lam, prod, rate, tot, n, th, rng, sc, ic, t_end):
    """Run all events up to ``t_end``; the clock is left at ``t_end``."""
    while sc[1] <= t_end:
        one_event(lam, prod, rate, tot, n, th, rng, sc, ic)
    sc[0] = t_end


@njit(cache=True, error_model="numpy")
def advance_recording_gaps(lam, prod, rate, tot, n, th, rng, sc, ic, t_end, k, times, gaps, start_idx):
    """Like :func:`advance`, appending ``(time, gaps)`` whenever a top gap changes.

    Gap ``j`` (1-based) is ``lam[L-j, 1] - lam[L-j-1, 1]``. Returns the number
    of records written; stops early (clock at the last event) if the buffers
    are full, signalled by ``sc[0] < t_end``.
    """
    L = lam.shape[0]
    idx = start_idx
    cap = times.shape[0]
    while sc[1] <= t_end:
        if idx >= cap:
            return idx
        l, kk, c = one_event(lam, prod, rate, tot, n, th, rng, sc, ic)
        if kk == 1 and l + c >= L - k - 1:
            times[idx] = sc[0]
            for j in range(1, k + 1):
                gaps[idx, j - 1] = lam[L - j, 1] - lam[L - j - 1, 1]
            idx += 1
    sc[0] = t_end
    return idx


@njit(cache=True, error_model="numpy")
def top_row_product(lam_top, N, th):
    """``theta * prod_{i=2..N} (1 + theta / (lam_1 - lam_i + theta (i-1)))``."""
    p = th
    for i in range(2, N + 1):
        p *= 1.0 + th / (lam_top[1] - lam_top[i] + th * (i - 1))
    return p


def new_arrays(n: int, N: int):
    L = N - n + 1
    lam = np.zeros((L, N + 2), dtype=np.int64)
    prod = np.ones((L, N + 2))
    rate = np.zeros((L, N + 2))
    tot = np.zeros(L)
    sc = np.zeros(2)
    ic = np.zeros(2, dtype=np.int64)
    return lam, prod, rate, tot, sc, ic
