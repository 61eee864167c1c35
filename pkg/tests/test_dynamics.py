import math
import random
import time
from collections import Counter

import numpy as np
import pytest
from scipy.stats import kstest

from jackpush.dynamics import (
    BlockedJump,
    SimState,
    apply_jump,
    iter_events,
    rate_bottom_closed,
    rate_bottom_level,
    rate_full_array,
    rate_generator_ratio,
    simulate,
    simulate_arrays,
    simulate_top_rows,
    step,
    top_rate_observable,
)
from jackpush.measures import JackMeasureSpec, enumerate_multilevel
from jackpush.partitions import GTPattern, Partition, interlaces
from jackpush.rng import trial_rng

THETAS = [0.5, 1.0, 1.5, 2.0, 3.0]


def random_pattern(rng, N, max_part=6):
    """Random GT pattern based at level 1, built top-down."""
    top = sorted((rng.randint(0, max_part) for _ in range(N)), reverse=True)
    rows = [top]
    for _ in range(N - 1):
        up = rows[0]
        rows.insert(0, [rng.randint(up[i + 1], up[i]) for i in range(len(up) - 1)])
    return GTPattern(1, rows)


def test_rate_matches_generator():
    rng = random.Random(7)
    t0 = time.time()
    checked = 0
    for _ in range(200):
        N = rng.randint(1, 5)
        th = rng.choice(THETAS)
        p = random_pattern(rng, N)
        for j in range(1, N + 1):
            for i in range(1, j + 1):
                a = rate_full_array(p, j, i, th)
                b = rate_generator_ratio(p, j, i, th)
                assert abs(a - b) <= 1e-10 * max(1.0, abs(b))
                checked += 1
    assert checked > 500
    assert time.time() - t0 < 10


def test_cached_rates_match_reference():
    rng = random.Random(8)
    for _ in range(100):
        N = rng.randint(1, 6)
        th = rng.choice(THETAS)
        p = random_pattern(rng, N)
        st = SimState.from_pattern(p, th)
        for (j, i), v in st.rate_cache.items():
            assert v == pytest.approx(rate_full_array(p, j, i, th), rel=1e-10, abs=1e-14)


def test_bottom_rate_forms_agree():
    rng = random.Random(9)
    for _ in range(300):
        n = rng.randint(1, 6)
        th = rng.choice(THETAS)
        lam = Partition(sorted((rng.randint(0, 8) for _ in range(n)), reverse=True))
        for i in range(1, n + 1):
            a = rate_bottom_level(lam, i, n, th)
            assert rate_bottom_closed(lam, i, n, th) == pytest.approx(a, rel=1e-10, abs=1e-14)
        assert top_rate_observable(lam, n, th) == pytest.approx(rate_bottom_level(lam, 1, n, th), rel=1e-12)


def test_single_level_intensity_is_constant():
    rng = random.Random(10)
    for _ in range(200):
        N = rng.randint(1, 20)
        th = rng.choice(THETAS)
        lam = Partition(sorted((rng.randint(0, 15) for _ in range(N)), reverse=True))
        total = sum(rate_bottom_level(lam, i, N, th) for i in range(1, N + 1))
        assert total == pytest.approx(N * th, rel=1e-10)


def test_base_level_intensity_in_multilevel_state():
    rng = random.Random(11)
    for _ in range(50):
        N = rng.randint(1, 6)
        th = rng.choice(THETAS)
        st = SimState.from_pattern(random_pattern(rng, N), th)
        assert sum(st.rate_of(1, i) for i in range(1, 2)) == pytest.approx(th)
        assert float(st.tot[0]) == pytest.approx(th)


def test_single_particle_rate():
    for th in THETAS:
        p = GTPattern(1, [[4]])
        assert rate_full_array(p, 1, 1, th) == pytest.approx(th)


def test_blocked_particle():
    p = GTPattern(1, [[1], [2, 1]])
    assert rate_full_array(p, 2, 2, 1.5) == 0.0
    st = SimState.from_pattern(p, 1.5)
    with pytest.raises(BlockedJump):
        apply_jump(st, 2, 2)


def test_push_moves_the_column():
    p = GTPattern(1, [[1], [1, 0], [1, 1, 0]])
    st = apply_jump(SimState.from_pattern(p, 1.0), 1, 1)
    assert st.pattern == GTPattern(1, [[2], [2, 0], [2, 1, 0]])
    # first move of (2,2) leaves (3,2) alone, the second one pushes it
    st = apply_jump(st, 2, 2)
    assert st.pattern == GTPattern(1, [[2], [2, 1], [2, 1, 0]])
    st = apply_jump(st, 2, 2)
    assert st.pattern == GTPattern(1, [[2], [2, 2], [2, 2, 0]])


def test_single_string_and_upward_push():
    p = GTPattern(1, [[1], [1, 0], [1, 0, 0], [1, 0, 0, 0]])
    st = apply_jump(SimState.from_pattern(p, 1.0), 2, 2)
    assert st.pattern == GTPattern(1, [[1], [1, 1], [1, 1, 0], [1, 1, 0, 0]])
    q = GTPattern(1, [[0], [2, 0], [2, 1, 0], [3, 1, 0, 0]])
    st = apply_jump(SimState.from_pattern(q, 1.0), 3, 2)
    assert st.pattern == GTPattern(1, [[0], [2, 0], [2, 2, 0], [3, 2, 0, 0]])
    st = apply_jump(SimState.from_pattern(q, 1.0), 1, 1)
    assert st.pattern == GTPattern(1, [[1], [2, 0], [2, 1, 0], [3, 1, 0, 0]])


def test_first_event_is_a_full_column():
    for seed in range(20):
        ev, moved = next(iter_events(1, 5, 1.3, 100.0, seed))
        assert ev.index == 1
        assert ev.level + ev.push_extent == 5
        assert [m[0] for m in moved] == list(range(ev.level, 6))
        assert all(m[2] == 1 for m in moved)


def test_interlacing_preserved_and_cache_coherent():
    for seed in range(10):
        rng = trial_rng(seed)
        th = [0.5, 1.0, 1.5, 2.0, 3.0][seed % 5]
        st = SimState.initial(1, 6, th)
        for _ in range(400):
            st, ev = step(st, rng)
            assert ev.push_extent >= 0
        p = st.pattern
        for lower, upper in zip(p.rows, p.rows[1:]):
            assert interlaces(lower, upper)
        cached = dict(st.rate_cache)
        fresh = SimState.from_pattern(p, th).rate_cache
        for key, v in fresh.items():
            assert cached[key] == pytest.approx(v, rel=1e-9, abs=1e-12)


def test_long_run_cache_coherence():
    rng = trial_rng(3)
    st = SimState.initial(1, 30, 1.5)
    st, _ = step(st, rng)
    for _ in range(30_000):
        st, _ = step(st, rng)
    fresh = SimState.from_pattern(st.pattern, 1.5).rate_cache
    for key, v in st.rate_cache.items():
        assert v == pytest.approx(fresh[key], rel=1e-9, abs=1e-12)


def test_determinism():
    a = simulate(1, 6, 1.5, [0.5, 2.0], seed=4)
    b = simulate(1, 6, 1.5, [0.5, 2.0], seed=4)
    c = simulate(1, 6, 1.5, [0.5, 2.0], seed=4, trial=1)
    assert a == b
    assert a != c
    arr = simulate_arrays(1, 6, 1.5, [2.0], seed=4)[0]
    assert GTPattern(1, [Partition(arr[l, 1 : l + 2]) for l in range(6)]) == a[1]


def test_simulate_validates_times():
    with pytest.raises(ValueError):
        simulate(1, 3, 1.0, [2.0, 1.0], seed=0)
    with pytest.raises(ValueError):
        SimState.initial(3, 2, 1.0)


def test_top_row_path_consistency():
    path = simulate_top_rows(12, 3, 1.5, 1.0, 2.0, seed=5)
    assert path.times[0] == 12.0 and path.times[-1] <= 14.0
    assert np.all(np.diff(path.times) > 0)
    lv = path.levels
    first = [lv[3 - j + 1, 0] - lv[3 - j, 0] for j in range(1, 4)]
    assert list(path.gaps[0]) == first
    assert np.all(path.gaps >= 0)
    again = simulate_top_rows(12, 3, 1.5, 1.0, 2.0, seed=5)
    assert np.array_equal(again.gaps, path.gaps)


def _tv(counts, n, probs):
    keys = set(counts) | set(probs)
    return 0.5 * sum(abs(counts.get(k, 0) / n - probs.get(k, 0.0)) for k in keys)


@pytest.mark.parametrize("theta", [1.0, 1.5])
def test_fixed_time_law_of_the_upper_levels(theta):
    # X_{3,4} at time s against the enumerated multilevel measure
    s, trials = 0.3, 20_000
    em = enumerate_multilevel(3, JackMeasureSpec(4, s, theta), 14)
    probs = {p.as_key(): pr for p, pr in zip(em.states, em.probs)}
    counts = Counter(simulate(3, 4, theta, [s], seed=1, trial=i)[0].as_key() for i in range(trials))
    assert _tv(counts, trials, probs) <= 0.03


@pytest.mark.slow
def test_restriction_consistency():
    # levels 3..4 of the full array against the chain started at level 3
    s, trials = 0.4, 100_000
    full, part = Counter(), Counter()
    for i in range(trials):
        lam = simulate_arrays(1, 4, 1.5, [s], seed=2, trial=i)[0]
        full[(tuple(lam[2, 1:4]), tuple(lam[3, 1:5]))] += 1
        lv = simulate_top_rows(4, 1, 1.5, s / 4, 0.0, seed=3, trial=i).levels
        part[(tuple(lv[0, :3]), tuple(lv[1, :4]))] += 1
    keys = set(full) | set(part)
    tv = 0.5 * sum(abs(full[k] - part[k]) for k in keys) / trials
    assert tv <= 0.02


def test_single_level_fixed_time_is_poisson():
    s, th, trials = 1.5, 1.3, 20_000
    x = np.array([simulate_arrays(1, 1, th, [s], seed=6, trial=i)[0][0, 1] for i in range(trials)])
    mean = th * s
    assert abs(x.mean() - mean) < 4 * math.sqrt(mean / trials)
    assert abs(x.var() / mean - 1) < 0.05


def test_single_level_waiting_times_are_exponential():
    th = 1.7
    rng = trial_rng(12)
    st = SimState.initial(1, 1, th)
    times = []
    for _ in range(5000):
        st, ev = step(st, rng)
        times.append(ev.time)
    gaps = np.diff([0.0] + times)
    assert kstest(gaps, "expon", args=(0, 1 / th)).pvalue > 0.001


def test_empty_state_rate():
    for n in (1, 3, 7):
        assert rate_bottom_level(Partition(), 1, n, 1.4) == pytest.approx(n * 1.4)
        assert rate_bottom_level(Partition(), 2, n, 1.4) == 0.0
    assert top_rate_observable(Partition(), 1, 0.8) == pytest.approx(0.8)


def test_bottom_row_event_rate():
    # level-n bottom row of X_{n,N} is a Poisson process of intensity n theta
    n, N, th, horizon = 3, 6, 1.5, 400.0
    events = sum(1 for ev, _ in iter_events(n, N, th, horizon, seed=13) if ev.level == n)
    mean = n * th * horizon
    assert abs(events - mean) < 4 * math.sqrt(mean)


@pytest.mark.slow
def test_interlacing_fuzz():
    # 10^6 events over the theta grid at N = 8
    per = 200_000
    for j, th in enumerate(THETAS):
        rng = trial_rng(100 + j)
        st = SimState.initial(1, 8, th)
        for _ in range(per):
            st, ev = step(st, rng)
            lam = st.lam
            for l in range(max(ev.level - 2, 0), min(ev.level + ev.push_extent, 7)):
                lo, up = lam[l, 1 : l + 2], lam[l + 1, 1 : l + 3]
                if not (np.all(up[:-1] >= lo) and np.all(lo >= up[1:])):
                    raise AssertionError(f"interlacing broken at level {l + 1}")
        assert st.event_count == per
