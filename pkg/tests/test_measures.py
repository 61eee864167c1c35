import math
import random
from collections import defaultdict

import numpy as np
import pytest
from scipy.stats import poisson

from jackpush.jack import log_J_principal, log_skew_J_one
from jackpush.measures import (
    EnumeratedMeasure,
    JackMeasureSpec,
    LatticeProbe,
    TailBoundExceeded,
    conditional_gap_pmf,
    cotransition_pmf,
    cutoff_for,
    enumerate_jack,
    enumerate_multilevel,
    gap_ratio_closed,
    edge_shift_check,
    log_branch_f,
    log_Delta,
    log_weight_beta_ensemble,
    log_weight_jack,
    log_weight_multilevel,
    nekrasov_R,
    partition_from_ell,
    sample_multilevel_fixed_time,
)
from jackpush.partitions import GTPattern, Partition, ell_coordinates, iter_interlacing, iter_partitions
from jackpush.rng import trial_rng


def test_spec_validation():
    with pytest.raises(ValueError):
        JackMeasureSpec(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        JackMeasureSpec(2, -1.0, 1.0)
    with pytest.raises(ValueError):
        JackMeasureSpec(2, 1.0, 0.0)


def test_jack_weight_examples():
    sp = JackMeasureSpec(3, 0.4, 1.7)
    assert float(log_weight_jack(Partition(), sp)) == pytest.approx(math.exp(-1.7 * 0.4 * 3))
    for th in (0.5, 1.0, 2.0):
        sp = JackMeasureSpec(1, 0.8, th)
        assert float(log_weight_jack(Partition([1]), sp)) == pytest.approx(0.8 * th * math.exp(-th * 0.8))
    assert log_weight_jack(Partition([1, 1]), JackMeasureSpec(1, 1.0, 1.0)).is_zero


def test_jack_weight_normalization():
    sp = JackMeasureSpec(2, 0.5, 1.5)
    total = sum(float(log_weight_jack(lam, sp)) for lam in iter_partitions(2, 40))
    assert abs(total - 1) < 1e-8


def test_enumerate_single_level_is_poisson():
    sp = JackMeasureSpec(1, 0.9, 1.3)
    em = enumerate_jack(sp, 30)
    for lam, p in zip(em.states, em.probs):
        assert p == pytest.approx(poisson.pmf(lam.weight, 0.9 * 1.3), rel=1e-10)


def test_enumerate_tail_bound():
    sp = JackMeasureSpec(2, 0.5, 1.5)
    em = enumerate_jack(sp, 40)
    assert em.tail_bound < 1e-8
    assert abs(em.probs.sum() - 1) < 1e-12
    with pytest.raises(TailBoundExceeded) as info:
        enumerate_jack(sp, 2, tolerance=1e-6)
    assert info.value.bound > 1e-6


def test_enumerated_measure_json_round_trip():
    em = enumerate_multilevel(1, JackMeasureSpec(2, 0.3, 1.5), 4)
    back = EnumeratedMeasure.from_json(em.to_json())
    assert back.states == em.states
    assert np.array_equal(back.probs, em.probs)
    assert back.prob(em.states[3]) == em.probs[3]
    em1 = enumerate_jack(JackMeasureSpec(2, 0.3, 1.5), 4)
    assert EnumeratedMeasure.from_json(em1.to_json()).states == em1.states


def test_branch_f_matches_pochhammer_form():
    rng = random.Random(5)
    for _ in range(200):
        lam = Partition(sorted([rng.randint(0, 7) for _ in range(rng.randint(0, 4))], reverse=True))
        th = rng.choice([0.5, 1.0, 1.5, 2.0, 2.7])
        for mu in iter_interlacing(lam):
            a = log_branch_f(lam, mu, th)
            b = log_skew_J_one(lam, mu, 1.0, th)
            assert abs(a.log_abs - b.log_abs) < 1e-10


def test_multilevel_empty_pattern():
    assert float(log_weight_multilevel(GTPattern.empty(1, 3), 0.7, 1.5)) == pytest.approx(math.exp(-1.5 * 0.7 * 3))


@pytest.mark.parametrize("theta", [0.5, 1.0, 1.5])
def test_multilevel_projects_to_jack(theta):
    s = 0.6
    sp = JackMeasureSpec(3, s, theta)
    by_top = defaultdict(float)
    for p in iter_patterns_upto(1, 3, 6):
        by_top[p.level(3)] += float(log_weight_multilevel(p, s, theta))
    for lam, w in by_top.items():
        assert w == pytest.approx(float(log_weight_jack(lam, sp)), rel=1e-10)


def iter_patterns_upto(n, N, M):
    from jackpush.partitions import iter_patterns

    return iter_patterns(n, N, M)


def test_multilevel_bottom_marginalization():
    s, th = 0.8, 1.7
    by_upper = defaultdict(float)
    for p in iter_patterns_upto(1, 3, 6):
        by_upper[p.rows[1:]] += float(log_weight_multilevel(p, s, th))
    for rows, w in by_upper.items():
        assert w == pytest.approx(float(log_weight_multilevel(GTPattern(2, rows), s, th)), rel=1e-10)


def test_lower_level_marginal_is_jack_measure():
    s, th = 0.5, 1.3
    em = enumerate_multilevel(1, JackMeasureSpec(3, s, th), 12)
    marg = defaultdict(float)
    for p, pr in zip(em.states, em.probs):
        marg[p.level(2)] += pr
    ref = JackMeasureSpec(2, s, th)
    for lam in iter_partitions(2, 5):
        assert marg[lam] == pytest.approx(float(log_weight_jack(lam, ref)), abs=1e-7)


def test_gibbs_conditional():
    s, th = 0.7, 1.5
    em = enumerate_multilevel(1, JackMeasureSpec(3, s, th), 5)
    groups = defaultdict(list)
    for p, pr in zip(em.states, em.probs):
        groups[p.level(3)].append((p, pr))
    for top, items in groups.items():
        tot = sum(pr for _, pr in items)
        ws = []
        for p, _ in items:
            w = log_skew_J_one(top, p.level(2), 1.0, th) * log_skew_J_one(p.level(2), p.level(1), 1.0, th)
            ws.append(float(w * log_J_principal(p.level(1), 1, 1.0, th)))
        norm = sum(ws)
        for (p, pr), w in zip(items, ws):
            assert abs(pr / tot - w / norm) < 1e-10


def test_cotransition_examples():
    assert cotransition_pmf(Partition(), 3, 1.5) == {Partition(): 1.0}
    for th in (0.5, 1.0, 2.0):
        pmf = cotransition_pmf(Partition([1]), 2, th)
        assert pmf[Partition()] == pytest.approx(0.5)
        assert pmf[Partition([1])] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        cotransition_pmf(Partition([1, 1, 1]), 2, 1.0)


def test_cotransition_normalization():
    rng = random.Random(2)
    for _ in range(60):
        k = rng.randint(2, 4)
        lam = Partition(sorted([rng.randint(0, 4) for _ in range(k)], reverse=True))
        if lam.weight > 8:
            continue
        th = rng.choice([0.5, 1.0, 1.5, 2.0])
        assert sum(cotransition_pmf(lam, k, th).values()) == pytest.approx(1.0, abs=1e-12)


def test_fixed_time_sampler_s_zero():
    rng = trial_rng(1)
    assert sample_multilevel_fixed_time(JackMeasureSpec(3, 0.0, 1.0), rng) == GTPattern.empty(1, 3)


def test_fixed_time_sampler_matches_enumeration():
    sp = JackMeasureSpec(2, 0.5, 1.5)
    em = enumerate_multilevel(1, sp, 30)
    rng = trial_rng(42)
    n = 200_000
    counts = defaultdict(int)
    for _ in range(n):
        counts[sample_multilevel_fixed_time(sp, rng).as_key()] += 1
    tv = 0.5 * sum(abs(counts.get(p.as_key(), 0) / n - pr) for p, pr in zip(em.states, em.probs))
    tv += 0.5 * sum(c / n for k, c in counts.items() if em.prob(GTPattern(1, [Partition(r) for r in k])) == 0)
    assert tv <= 0.01


def _two_row_conditionals(N, s, th, M):
    em = enumerate_multilevel(N - 1, JackMeasureSpec(N, s, th), M)
    groups = defaultdict(dict)
    for p, pr in zip(em.states, em.probs):
        lam, mu = p.level(N), p.level(N - 1)
        key = (lam, tuple(mu.row(i) for i in range(2, N)))
        groups[key][lam.row(1) - mu.row(1)] = groups[key].get(lam.row(1) - mu.row(1), 0.0) + pr
    return groups


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("theta", [0.7, 1.0, 1.5, 2.0])
def test_conditional_gap_pmf_matches_enumeration(N, theta):
    for (lam, rest), d in _two_row_conditionals(N, 0.7, theta, 6).items():
        ell = ell_coordinates(lam, N, theta)
        m = [rest[N - 2 - i] + theta * i for i in range(1, N - 1)]
        pmf = conditional_gap_pmf(ell, m, theta)
        tot = sum(d.values())
        assert len(pmf) == lam.row(1) - lam.row(2) + 1
        for k, v in d.items():
            assert abs(pmf[k] - v / tot) < 1e-10
        for k in range(len(pmf) + 2):
            want = pmf[k] / pmf[0] if k < len(pmf) else 0.0
            assert gap_ratio_closed(ell, m, k, theta) == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_conditional_gap_pmf_theta_one():
    ell = ell_coordinates(Partition([6, 2, 1]), 3, 1.0)
    m = [1 + 1.0]
    pmf = conditional_gap_pmf(ell, m, 1.0)
    w = np.array([ell[-1] - m[0] - k - 1 for k in range(len(pmf))])
    assert np.allclose(pmf, w / w.sum(), atol=1e-14)


def test_conditional_gap_pmf_errors():
    with pytest.raises(ValueError):
        conditional_gap_pmf([1.0], [], 1.0)
    with pytest.raises(ValueError):
        conditional_gap_pmf([1.0, 2.0, 3.0], [], 1.0)


def test_beta_ensemble_triangle():
    rng = random.Random(9)
    for _ in range(100):
        N = rng.randint(1, 4)
        th = rng.choice([0.5, 1.0, 1.5, 2.0, 2.5])
        s = rng.uniform(0.1, 2.0)
        lam = Partition(sorted([rng.randint(0, 7) for _ in range(N)], reverse=True))
        a = log_weight_jack(lam, JackMeasureSpec(N, s, th))
        b = log_weight_beta_ensemble(ell_coordinates(lam, N, th), N, s, th)
        assert abs(a.log_abs - b.log_abs) <= 1e-10 * max(1.0, abs(a.log_abs))
        assert partition_from_ell(ell_coordinates(lam, N, th), th) == lam


def test_beta_ensemble_single_particle():
    s, th = 0.9, 1.7
    w = [float(log_weight_beta_ensemble(Partition([k]), 1, s, th)) for k in range(8)]
    for k in range(7):
        assert w[k + 1] / w[k] == pytest.approx(s * th / (k + 1))


def test_beta_ensemble_vandermonde_at_theta_one():
    s = 0.8
    lam_a, lam_b = Partition([3, 1, 0]), Partition([4, 2, 2])
    ea, eb = ell_coordinates(lam_a, 3, 1.0), ell_coordinates(lam_b, 3, 1.0)

    def vdm2(e):
        return np.prod([(e[j] - e[i]) ** 2 for i in range(3) for j in range(i + 1, 3)])

    def single(e):
        return np.prod([(s ** x) / math.gamma(x) for x in e])

    ratio = float(log_weight_beta_ensemble(ea, 3, s, 1.0) / log_weight_beta_ensemble(eb, 3, s, 1.0))
    assert ratio == pytest.approx(vdm2(ea) * single(ea) / (vdm2(eb) * single(eb)), rel=1e-12)


def test_beta_ensemble_malformed():
    with pytest.raises(ValueError):
        log_weight_beta_ensemble([1.3, 2.0], 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        log_weight_beta_ensemble([3.0, 2.0], 2, 1.0, 1.0)


def test_nekrasov_linear():
    sp = JackMeasureSpec(3, 1.0, 2.0)
    em = enumerate_jack(sp, cutoff_for(sp, 1e-14))
    r = [nekrasov_R(x, 3, 1.0, 2.0, em) for x in (10.5, 20.5, 30.5)]
    assert abs(r[2] - 2 * r[1] + r[0]) < 1e-6
    # unit slope
    a, b = nekrasov_R(1000.5, 3, 1.0, 2.0, em), nekrasov_R(2000.5, 3, 1.0, 2.0, em)
    assert (b - a) / 1000 == pytest.approx(1.0, abs=1e-8)


def test_nekrasov_single_level():
    sp = JackMeasureSpec(1, 0.7, 1.4)
    em = enumerate_jack(sp, cutoff_for(sp, 1e-15))
    xs = (-0.3, -2.9, -7.7)
    r = [nekrasov_R(x, 1, 0.7, 1.4, em) for x in xs]
    slope = (r[1] - r[0]) / (xs[1] - xs[0])
    assert r[2] == pytest.approx(r[0] + slope * (xs[2] - xs[0]), abs=1e-12)
    assert slope == pytest.approx(1.0, abs=1e-12)


def test_nekrasov_rejects_lattice_probe():
    sp = JackMeasureSpec(2, 1.0, 1.0)
    em = enumerate_jack(sp, 10)
    with pytest.raises(LatticeProbe):
        nekrasov_R(3.0, 2, 1.0, 1.0, em)


@pytest.mark.parametrize("theta", [0.3, 0.7, 1.0, 1.5, 2.0])
def test_edge_shift_identities(theta):
    sp = JackMeasureSpec(2, 1.0, theta)
    em = enumerate_jack(sp, max(50, cutoff_for(sp, 1e-15)))
    r1, r2 = edge_shift_check(2, 1.0, theta, em)
    assert r1 <= 1e-8 and r2 <= 1e-8


def test_edge_shift_three_levels():
    sp = JackMeasureSpec(3, 0.8, 1.5)
    em = enumerate_jack(sp, cutoff_for(sp, 1e-14))
    r1, r2 = edge_shift_check(3, 0.8, 1.5, em)
    assert r1 <= 1e-8 and r2 <= 1e-8


def test_edge_shift_needs_two_levels():
    sp = JackMeasureSpec(1, 1.0, 1.0)
    with pytest.raises(ValueError):
        edge_shift_check(1, 1.0, 1.0, enumerate_jack(sp, 10))


def test_edge_shift_half_theta_is_a_genuine_exception():
    # at theta = 1/2 the boundary value Delta(ell_{N-1} + theta - 1) does not
    # vanish, and the first identity fails by a macroscopic amount
    sp = JackMeasureSpec(2, 1.0, 0.5)
    r1, _ = edge_shift_check(2, 1.0, 0.5, enumerate_jack(sp, cutoff_for(sp, 1e-15)))
    assert r1 > 0.1


@pytest.mark.parametrize("theta", [0.3, 0.7, 1.0, 1.5, 2.0])
def test_boundary_vanishing(theta):
    for lam in iter_partitions(3, 5):
        ell = ell_coordinates(lam, 3, theta)
        assert log_Delta(ell[-2] + theta - 1, ell[:-1], theta).is_zero


def test_boundary_does_not_vanish_at_half():
    ell = ell_coordinates(Partition([2, 1]), 2, 0.5)
    assert not log_Delta(ell[-2] - 0.5, ell[:-1], 0.5).is_zero
