import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from thzrelay.analytic import Direction, MixedConfig, MultihopConfig, Relaying, ca_cdf
from thzrelay.channel import AccessLink, Modulation, ThzHop
from thzrelay.montecarlo import (Accumulator, Combiner, Estimate, RngStream, empirical_cdf,
                                 estimate_ber, estimate_outage, ks_critical, ks_distance, merge,
                                 sample_alpha_mu, sample_generalized_k, sample_pointing,
                                 shard_outage, simulate_coupled, simulate_snr)

HOP = ThzHop(alpha=2.0, mu=2.0, phi=37.0, s_cap=0.054)
TWO = MultihopConfig((HOP, HOP), (2e4, 2e4))


def rng(seed=0):
    return np.random.default_rng(seed)


def test_alpha_mu_rayleigh_and_gamma_identity():
    r = sample_alpha_mu(2.0, 1.0, 1.0, rng(1), 200_000)
    assert np.mean(r ** 2) == pytest.approx(1.0, abs=3 * np.std(r ** 2) / math.sqrt(r.size))
    alpha, mu, omega = 1.5, 0.6, 1.7
    r = sample_alpha_mu(alpha, mu, omega, rng(2), 200_000)
    y = r ** alpha
    assert y.mean() == pytest.approx(omega ** alpha, abs=3 * y.std() / math.sqrt(y.size))
    assert stats.kstest(y * mu / omega ** alpha, stats.gamma(mu).cdf).pvalue > 0.01


def test_pointing_moments_and_limit():
    s, phi = 0.054, 14.5
    h = sample_pointing(s, phi, rng(3), 200_000)
    assert h.max() <= s
    assert h.mean() == pytest.approx(s * phi / (phi + 1), abs=3 * h.std() / math.sqrt(h.size))
    assert np.allclose(sample_pointing(s, 1e12, rng(4), 100), s, rtol=1e-9)
    # density phi h^(phi-1) / S^phi  <=>  (h/S)^phi uniform
    assert stats.kstest((h / s) ** phi, "uniform").pvalue > 0.01


def test_generalized_k_mean_and_shadowing_limit():
    b = 1.3
    x = sample_generalized_k(0.75, 1.0, b, rng(5), 400_000)
    assert x.mean() == pytest.approx(0.75 / b ** 2, abs=3 * x.std() / math.sqrt(x.size))
    dists = []
    for mo in (2.0, 20.0, 500.0):
        y = sample_generalized_k(mo, 1.0, math.sqrt(mo), rng(6), 100_000)
        dists.append(ks_distance(y, stats.gamma(1.0).cdf))
    assert dists[0] > dists[1] > dists[2]


@pytest.mark.parametrize("fn,args", [(sample_alpha_mu, (0.0, 1.0, 1.0)),
                                     (sample_pointing, (1.5, 2.0)),
                                     (sample_generalized_k, (1.0, -1.0, 1.0))])
def test_sampler_domains(fn, args):
    with pytest.raises(ValueError):
        fn(*args, rng(0), 4)


def test_single_hop_combiners_coincide():
    cfg = MultihopConfig((HOP,), (300.0,), Relaying.FG)
    draws = {c: simulate_snr(cfg, c, rng(7), 1000) for c in
             (Combiner.CA, Combiner.FG_EXACT, Combiner.FG_BOUND)}
    assert np.allclose(draws[Combiner.CA], draws[Combiner.FG_EXACT], rtol=1e-14)
    assert np.allclose(draws[Combiner.CA], draws[Combiner.FG_BOUND], rtol=1e-14)


def test_coupled_dominance():
    cfg = MultihopConfig((HOP, HOP, HOP), (2e4, 3e4, 1e4), Relaying.FG)
    exact, bound = simulate_coupled(cfg, rng(8), 100_000)
    assert np.all(bound >= exact * (1 - 1e-12))
    grid = np.geomspace(1.0, 1e5, 50)
    assert np.all(empirical_cdf(bound)(grid) <= empirical_cdf(exact)(grid))


def test_downlink_small_psi_limit():
    acc = AccessLink(m_g=1.0, sigma_db=2.0, phi_a=14.5, s_a=0.054)
    bh = MultihopConfig((HOP,), (2e4,), Relaying.FG)
    cfg = MixedConfig(bh, acc, acc.gamma0_for_mean(1e3), Direction.DOWNLINK, psi=2.0)
    gn = simulate_snr(bh, Combiner.FG_EXACT, rng(9), 1000)
    # the downlink draws backhaul first from the same generator state
    g = simulate_snr(cfg, Combiner.DOWNLINK, rng(9), 1000, psi=1e-12)
    assert np.allclose(g, gn, rtol=1e-6)


def test_combiner_mismatch():
    with pytest.raises(TypeError):
        simulate_snr(TWO, Combiner.UPLINK, rng(0), 10)


def test_outage_limits_and_minimum_budget():
    s = RngStream(1)
    assert estimate_outage(TWO, Combiner.CA, 0.0, 10_000, s).mean == 0.0
    assert estimate_outage(TWO, Combiner.CA, np.inf, 10_000, s).mean == 1.0
    with pytest.raises(ValueError):
        estimate_outage(TWO, Combiner.CA, 1.0, 9_999, s)


def test_outage_matches_analytic():
    th = np.array([2.0, 20.0, 100.0])
    est = estimate_outage(TWO, Combiner.CA, th, 200_000, RngStream(2024))
    ref = ca_cdf(TWO, th)
    for e, r in zip(est, ref):
        assert abs(e.mean - r) <= 3.5 * e.std_error + 1e-6


def test_ber_limits_and_rayleigh():
    mod = Modulation.dbpsk()
    tiny = MultihopConfig((HOP,), (1e-300,))
    assert estimate_ber(tiny, Combiner.CA, mod, 10_000, RngStream(3)).mean == pytest.approx(0.5)
    huge = MultihopConfig((HOP,), (1e300,))
    assert estimate_ber(huge, Combiner.CA, mod, 10_000, RngStream(3)).mean == 0.0
    ray = MultihopConfig((ThzHop(2.0, 1.0, 1e12, 1.0),), (4.0,))
    e = estimate_ber(ray, Combiner.CA, mod, 200_000, RngStream(4))
    assert abs(e.mean - 0.5 / 5.0) <= 3 * e.std_error


def test_reproducibility():
    a = estimate_outage(TWO, Combiner.CA, 50.0, 20_000, RngStream(77, 3))
    b = estimate_outage(TWO, Combiner.CA, 50.0, 20_000, RngStream(77, 3))
    c = estimate_outage(TWO, Combiner.CA, 50.0, 20_000, RngStream(77, 4))
    assert a == b
    assert a != c


@pytest.mark.parametrize("shards", [2, 3, 7])
def test_shard_invariance_exact(shards):
    s = RngStream(5)
    whole = estimate_outage(TWO, Combiner.CA, [10.0, 80.0], 150_001, s)
    split = estimate_outage(TWO, Combiner.CA, [10.0, 80.0], 150_001, s, shards=shards)
    assert whole == split


def test_manual_shard_merge():
    s = RngStream(6)
    parts = [shard_outage(TWO, Combiner.CA, 30.0, a, b, s)[0]
             for a, b in [(0, 40_000), (40_000, 70_001), (70_001, 100_000)]]
    assert merge(parts) == estimate_outage(TWO, Combiner.CA, 30.0, 100_000, s)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=60),
       st.integers(1, 59))
def test_accumulator_split_exact(values, cut):
    v = np.array(values)
    cut = min(cut, len(v) - 1)
    whole = Accumulator.of(v).estimate()
    split = (Accumulator.of(v[:cut]) + Accumulator.of(v[cut:])).estimate()
    assert whole == split
    assert whole.mean == pytest.approx(float(np.mean(v)), rel=1e-12, abs=1e-9)
    assert whole.std_error == pytest.approx(float(np.std(v, ddof=1)) / math.sqrt(len(v)),
                                            rel=1e-9, abs=1e-9)


def test_estimate_validation():
    with pytest.raises(ValueError):
        Estimate(0.0, 0.0, 0)
    lo, hi = Estimate(0.5, 0.1, 10).ci()
    assert lo == pytest.approx(0.304) and hi == pytest.approx(0.696)
    with pytest.raises(ValueError):
        RngStream(-1)


def test_ks_distance_properties():
    x = rng(10).random(1000)
    assert ks_distance(x, x) == 0.0
    assert ks_distance(np.zeros(10), np.ones(10)) == 1.0
    assert ks_distance(x, lambda t: np.clip(t, 0, 1)) < ks_critical(1000)


def test_ca_ks_below_critical():
    s = simulate_snr(TWO, Combiner.CA, rng(12), 4000)
    d = ks_distance(s, lambda g: ca_cdf(TWO, g))
    assert 0 <= d < ks_critical(4000, 0.01)
