import math

import numpy as np
import pytest
from scipy import stats as sps

from banditlab.core import SufficientStats
from banditlab.policies import (PIUCB, ClassicalUCB, MaxSearchGaussian,
                                UniformRandom, alpha_schedule,
                                argmax_random_tie, choose_arms,
                                classical_ucb_index,
                                confidence_bounds_gaussian, maxsearch_index,
                                parse_policy, piucb_index, select_arm)
from banditlab.special import ierfc
from oracles import SQRT2, bisect, chi2_cdf, t_cdf


def worked_state(t=10):
    s = SufficientStats.from_rewards([[0.0, 1.0]])
    s.t = t
    return s


# Hand evaluation of the worked state with quadrature-inverted quantiles.
T95_1 = bisect(lambda q: t_cdf(q, 1), 0.95, -100, 100)
CHI05_1 = bisect(lambda q: chi2_cdf(q, 1), 0.05, 1e-12, 10)
MU_PLUS = 0.5 + math.sqrt(0.5) * T95_1 / math.sqrt(2)
SD_PLUS = math.sqrt(0.5 / CHI05_1)


def test_hand_evaluation_constants():
    assert T95_1 == pytest.approx(6.3138, abs=1e-3)
    assert CHI05_1 == pytest.approx(0.003932, abs=1e-5)
    assert MU_PLUS == pytest.approx(3.657, abs=1e-3)
    assert SD_PLUS ** 2 == pytest.approx(127.2, abs=0.1)


def test_alpha_schedule_clamps():
    assert alpha_schedule(10, SQRT2) == pytest.approx(0.1)
    assert alpha_schedule(2, 0.5) == 0.5
    assert alpha_schedule(1e30, 10) == 1e-12


def test_classical_ucb():
    s = SufficientStats.from_rewards([[0.0, 0.0], [1.0]])
    s.t = math.e ** 2
    assert classical_ucb_index(s, 0.0)[0, 1] == 1.0
    assert classical_ucb_index(s, SQRT2)[0, 0] == pytest.approx(1.41421, abs=1e-5)
    fresh = SufficientStats(2)
    fresh.t = 5
    assert np.all(np.isinf(classical_ucb_index(fresh, 1.0)))


def test_classical_bonus_decreasing_in_pulls():
    s = SufficientStats.from_rewards([[0.0] * n for n in range(1, 30)])
    s.t = 1000
    assert np.all(np.diff(classical_ucb_index(s, 1.0)[0]) < 0)


def test_confidence_bounds_worked_example():
    mu_p, sd_p = confidence_bounds_gaussian(worked_state(), SQRT2, SQRT2)
    assert mu_p[0, 0] == pytest.approx(MU_PLUS, rel=1e-9)
    assert sd_p[0, 0] == pytest.approx(SD_PLUS, rel=1e-9)


def test_confidence_bounds_clamp_boundary():
    s = worked_state()
    mu_p, _ = confidence_bounds_gaussian(s, 1e-9, SQRT2)
    t75 = bisect(lambda q: t_cdf(q, 1), 0.75, -100, 100)
    assert mu_p[0, 0] == pytest.approx(0.5 + math.sqrt(0.5) * t75 / math.sqrt(2), rel=1e-9)


def test_sigma_bound_inflates():
    rng = np.random.default_rng(0)
    for n in (2, 3, 10, 50):
        s = SufficientStats.from_rewards([rng.normal(size=n)])
        for t in (5, 100, 10_000):
            s.t = t
            _, sd_p = confidence_bounds_gaussian(s, 1.0, 1.0)
            assert sd_p[0, 0] ** 2 > s.variance[0, 0]


def test_piucb_worked_example():
    z = piucb_index(worked_state(), SQRT2, SQRT2, r_max=1.0)[0, 0]
    assert z == pytest.approx((MU_PLUS - 1) / SD_PLUS, rel=1e-9)
    assert z == pytest.approx(0.2356, abs=1e-3)


def test_piucb_zero_at_boundary():
    s = worked_state()
    mu_p, _ = confidence_bounds_gaussian(s, SQRT2, SQRT2)
    assert piucb_index(s, SQRT2, SQRT2, r_max=mu_p[0, 0])[0, 0] == 0.0


def test_piucb_argmax_scale_invariant():
    rng = np.random.default_rng(3)
    for _ in range(20):
        data = [rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), size=rng.integers(2, 15)) for _ in range(4)]
        r_max = max(map(max, data))
        base = SufficientStats.from_rewards(data)
        base.t = 200
        lam = rng.uniform(0.1, 10)
        scaled = SufficientStats.from_rewards([d * lam for d in data])
        scaled.t = 200
        assert np.argmax(piucb_index(base, 0.5, SQRT2)) == np.argmax(piucb_index(scaled, 0.5, SQRT2))
        assert scaled.r_max[0] == pytest.approx(lam * r_max)


def test_maxsearch_worked_example():
    s = worked_state()
    v = maxsearch_index(s, SQRT2, SQRT2, r_max=1.0)[0, 0]
    assert v == pytest.approx(SD_PLUS * ierfc((1 - MU_PLUS) / (SQRT2 * SD_PLUS)) / SQRT2, rel=1e-9)
    assert v == pytest.approx(5.95, abs=0.01)


def test_maxsearch_small_spread_limit():
    s = SufficientStats.from_rewards([[3.0, 3.0 + 1e-9]])
    s.t = 10
    mu_p, _ = confidence_bounds_gaussian(s, SQRT2, SQRT2)
    assert maxsearch_index(s, SQRT2, SQRT2, r_max=1.0)[0, 0] == pytest.approx(mu_p[0, 0] - 1.0, rel=1e-6)
    flat = SufficientStats.from_rewards([[3.0, 3.0]])
    flat.t = 10
    assert maxsearch_index(flat, SQRT2, SQRT2, r_max=1.0)[0, 0] == pytest.approx(2.0)
    assert maxsearch_index(flat, SQRT2, SQRT2, r_max=4.0)[0, 0] == 0.0
    assert piucb_index(flat, SQRT2, SQRT2, r_max=4.0)[0, 0] == -math.inf


def test_maxsearch_increasing_in_mean():
    vals = []
    for shift in np.linspace(-3, 3, 50):
        s = SufficientStats.from_rewards([[shift, shift + 1.0, shift - 0.5]])
        s.t = 50
        vals.append(maxsearch_index(s, SQRT2, SQRT2, r_max=2.0)[0, 0])
    assert np.all(np.diff(vals) > 0)


def scalar_piucb_reference(rewards, t, r_max, c_mu, c_sigma):
    """Line-by-line scalar PIUCB index with quantiles from scipy.stats."""
    out = []
    for xs in rewards:
        n = len(xs)
        mean = sum(xs) / n
        sd = math.sqrt(sum((x - mean) ** 2 for x in xs) / (n - 1))
        a_mu = min(max(t ** (-c_mu ** 2 / 2), 1e-12), 0.5)
        a_sigma = min(max(t ** (-c_sigma ** 2 / 2), 1e-12), 0.5)
        mu_hat = mean + sd * sps.t.isf(a_mu / 2, n - 1) / math.sqrt(n)
        var_hat = (n - 1) * sd ** 2 / sps.chi2.ppf(a_sigma / 2, n - 1)
        out.append((mu_hat - r_max) / math.sqrt(var_hat))
    return out


def test_piucb_matches_transcription():
    rng = np.random.default_rng(12)
    for _ in range(100):
        k = rng.integers(1, 5)
        data = [list(rng.normal(rng.uniform(-2, 2), rng.uniform(0.2, 3), size=rng.integers(2, 40))) for _ in range(k)]
        c = rng.uniform(0.3, 2.5)
        t = int(rng.integers(2, 100_000))
        s = SufficientStats.from_rewards(data)
        s.t = t
        r_max = s.r_max[0]
        got = piucb_index(s, c, c)[0]
        want = scalar_piucb_reference(data, t, r_max, c, c)
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)


def test_translation_equivariance():
    rng = np.random.default_rng(8)
    data = [rng.normal(m, s, size=8) for m, s in [(1, 1), (0, 2), (-1, 3)]]
    a = SufficientStats.from_rewards(data)
    b = SufficientStats.from_rewards([d + 7.5 for d in data])
    a.t = b.t = 300
    ma, sa = confidence_bounds_gaussian(a, 0.5, SQRT2)
    mb, sb = confidence_bounds_gaussian(b, 0.5, SQRT2)
    np.testing.assert_allclose(mb, ma + 7.5, rtol=1e-12)
    np.testing.assert_allclose(sb, sa, rtol=1e-9)
    assert np.argmax(piucb_index(a, 0.5, SQRT2)) == np.argmax(piucb_index(b, 0.5, SQRT2))
    assert np.argmax(maxsearch_index(a, SQRT2, SQRT2)) == np.argmax(maxsearch_index(b, SQRT2, SQRT2))


def test_bounds_grow_with_t():
    s = SufficientStats.from_rewards([[0.0, 1.0, 0.3, 0.6]])
    mus, sds = [], []
    for t in (10, 1e3, 1e6, 1e9, 1e11):
        s.t = t
        m, sd = confidence_bounds_gaussian(s, SQRT2, SQRT2)
        mus.append(m[0, 0])
        sds.append(sd[0, 0])
    assert np.all(np.diff(mus) > 0) and np.all(np.diff(sds) > 0)


def test_select_arm_initialisation_order():
    s = SufficientStats(3)
    rng = np.random.default_rng(0)
    order = []
    for _ in range(6):
        k = int(select_arm(PIUCB(), s, rng).chosen[0])
        order.append(k)
        s.observe(k, rng.normal())
    assert order == [0, 1, 2, 0, 1, 2]
    rep = select_arm(PIUCB(), s, rng)
    assert rep.values[0, rep.chosen[0]] == rep.values[0].max()


def test_tie_break_frequencies():
    values = np.tile([0.1, 0.9, 0.9], (10_000, 1))
    u = np.random.default_rng(21).random(10_000)
    chosen, tied = argmax_random_tie(values, u)
    assert set(np.unique(chosen)) == {1, 2}
    assert tied.all()
    assert np.mean(chosen == 1) == pytest.approx(0.5, abs=0.05)


def test_uniform_random_frequencies():
    s = SufficientStats(4, n_runs=10_000)
    rep = select_arm(UniformRandom(), s, np.random.default_rng(2))
    freq = np.bincount(rep.chosen, minlength=4) / 10_000
    np.testing.assert_allclose(freq, 0.25, atol=0.02)


def test_choose_arms_mixed_warmup():
    s = SufficientStats(2, n_runs=2)
    s.observe([0, 0], [1.0, 1.0])
    s.observe([1, 0], [0.0, 2.0])
    rep = choose_arms(ClassicalUCB(init_pulls=2), s, np.zeros(2))
    assert list(rep.chosen) == [0, 1]


def test_parse_policy():
    assert parse_policy("piucb1") == PIUCB(SQRT2, SQRT2)
    assert parse_policy("piucb2") == PIUCB(0.5, SQRT2)
    assert parse_policy("piucb:0.5,1.4142") == PIUCB(0.5, 1.4142)
    assert parse_policy("ucb") == ClassicalUCB(SQRT2)
    assert parse_policy("ucb:0.3") == ClassicalUCB(0.3)
    assert parse_policy("maxsearch") == MaxSearchGaussian(SQRT2, SQRT2)
    assert parse_policy("maxsearch:1,2") == MaxSearchGaussian(1.0, 2.0)
    assert isinstance(parse_policy("random"), UniformRandom)
    for bad in ("piucb:1", "foo", "ucb:x", "piucb:0,1", "maxsearch:1,2,3"):
        with pytest.raises(ValueError):
            parse_policy(bad)
