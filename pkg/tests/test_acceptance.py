"""Acceptance criteria, one PASS/FAIL line each.

Criteria that fail for reasons recorded in the decisions ledger are reported as
FAIL and then marked xfail; every other FAIL is a hard test failure.
"""

import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate, special, stats

from identity_corpus import CASES
from thzrelay.analytic import (Direction, MixedConfig, MultihopConfig, Relaying, avg_ber_from_cdf,
                               ca_avg_ber, ca_cdf, ca_outage_asymptotic, dl_avg_ber, dl_cdf,
                               dl_outage_asymptotic, fg_avg_ber, fg_cdf, fg_outage_asymptotic,
                               rayleigh_dbpsk_ber, uplink_avg_ber, uplink_outage,
                               uplink_outage_asymptotic)
from thzrelay.channel import (AccessLink, Modulation, PointingGeometry, ThzHop, access_snr_cdf,
                              avg_snr, generalized_k_pdf, hop_snr_cdf, m_omega, pointing_params)
from thzrelay.cli import fit_slope
from thzrelay.montecarlo import (Combiner, RngStream, estimate_outage, sample_alpha_mu,
                                 sample_generalized_k, sample_pointing, simulate_snr)
from thzrelay.scenario import default_scenario_path, load_scenario

MC_BUDGET = 10_000_000
S_CAP = 0.054
DBPSK = Modulation.dbpsk()
TABLE_HOP = ThzHop(alpha=2.0, mu=2.0, phi=37.0, s_cap=S_CAP)
TABLE_ACCESS = AccessLink(m_g=1.0, sigma_db=2.0, phi_a=14.5, s_a=S_CAP, g_a_dbi=10.0)

# every analytic evaluation made below; criterion 6 checks their convergence records
CONTOUR_LOG: list = []


def verdict(accept, tag, ok, detail, known_fail=False):
    accept(tag, ok, detail)
    if not ok and known_fail:
        pytest.xfail(f"{tag} fails as recorded in the ledger: {detail}")
    assert ok, detail


def logged(fn, cfg, gamma, tag):
    res = fn(cfg, gamma, full_output=True)
    CONTOUR_LOG.append((tag, res.diagnostics["contour"]))
    return res.value


def mixed(hop, access, mean, direction):
    relaying = Relaying.FG if direction is Direction.DOWNLINK else Relaying.CA
    bh = MultihopConfig((hop,), (mean / hop.moment(1.0, 1.0),), relaying)
    # both links normalised by their full mean SNR, pointing loss included
    g0_a = mean / math.exp(access.log_moment(access.snr_scale(1.0), 1.0).real)
    return MixedConfig(bh, access, g0_a, direction)


def shipped(relaying=Relaying.CA):
    sc = load_scenario(default_scenario_path())
    return sc, lambda ptx: replace(sc.config_at(ptx), relaying=relaying)


def quiet(fn, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kw)


# ---------------------------------------------------------------------------
# 1. shadowing parameter
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("sigma_db,printed", [(2.0, 18.36), (8.0, 0.75), (5.0, 2.5)])
def test_c1_m_omega(accept, sigma_db, printed):
    v = m_omega(sigma_db)
    verdict(accept, f"C1 m_omega({sigma_db:g})", abs(v - printed) <= 0.01,
            f"{v:.4f} vs {printed} +/- 0.01", known_fail=sigma_db == 5.0)


# ---------------------------------------------------------------------------
# 2. diversity slopes of the dual-hop mixed configurations
# ---------------------------------------------------------------------------

SLOPE_CONFIGS = {
    "A": (ThzHop(1.5, 1.0, 37.0, S_CAP), AccessLink(1.0, 5.0, 14.5, S_CAP, g_a_dbi=10.0), 0.75),
    "B": (TABLE_HOP, AccessLink(1.0, 8.0, 14.5, S_CAP, g_a_dbi=10.0), 0.62),
    "C": (TABLE_HOP, AccessLink(1.0, 2.0, 2.3, S_CAP, g_a_dbi=10.0), 1.15),
}


@pytest.mark.parametrize("name", sorted(SLOPE_CONFIGS))
def test_c2_diversity_slope(accept, name):
    hop, access, stated = SLOPE_CONFIGS[name]
    db = np.arange(0.0, 60.0 + 1e-9, 2.0)
    top = db[db >= db[-1] - 20.0 - 1e-9]
    out = [float(uplink_outage(mixed(hop, access, 10 ** (x / 10), Direction.UPLINK), 1.0))
           for x in top]
    slope = fit_slope(top, out)
    verdict(accept, f"C2 slope config {name}", abs(slope - stated) <= 0.1,
            f"fitted {slope:.3f} vs {stated} +/- 0.1", known_fail=name in ("B", "C"))


# ---------------------------------------------------------------------------
# 3. analytic vs Monte Carlo
# ---------------------------------------------------------------------------


def agreement(analytic, est):
    return abs(analytic - est.mean) <= max(3 * est.std_error, 0.05 * analytic)


def test_c3_ca_two_hop_vs_mc(accept):
    sc, at = shipped()
    rows, ok = [], True
    for i, ptx in enumerate(sc.ptx_dbm):
        cfg = at(ptx)
        a = float(logged(ca_cdf, cfg, sc.gamma_th, "C3 CA"))
        if a < 1e-3:
            continue
        est = estimate_outage(cfg, Combiner.CA, sc.gamma_th, MC_BUDGET, RngStream(sc.seed, i))
        ok &= agreement(a, est)
        rows.append(f"{ptx:g}dBm {a:.4e}/{est.mean:.4e}")
    verdict(accept, "C3 CA N=2 vs MC", ok and bool(rows), "; ".join(rows))


def test_c3_downlink_single_hop_vs_mc(accept):
    rows, ok = [], True
    for i, x in enumerate(np.arange(0.0, 60.0 + 1e-9, 5.0)):
        cfg = mixed(TABLE_HOP, TABLE_ACCESS, 10 ** (x / 10), Direction.DOWNLINK)
        a = float(logged(dl_cdf, cfg, 1.0, "C3 downlink"))
        if a < 1e-3:
            continue
        est = estimate_outage(cfg, Combiner.DOWNLINK, 1.0, MC_BUDGET, RngStream(2024, 100 + i))
        ok &= agreement(a, est)
        rows.append(f"{x:g}dB {a:.4e}/{est.mean:.4e}")
    verdict(accept, "C3 downlink N=1 vs MC", ok and bool(rows), "; ".join(rows))


# ---------------------------------------------------------------------------
# 4. direction of the fixed-gain bound
# ---------------------------------------------------------------------------


def fg_gap(n):
    sc = load_scenario(default_scenario_path())
    budget = sc.budget.with_ptx(10.0)
    hops = tuple(replace(TABLE_HOP, dist_m=10.0) for _ in range(n))
    cfg = MultihopConfig(hops, tuple(avg_snr(h, budget) for h in hops), Relaying.FG)
    pilot = simulate_snr(cfg, Combiner.FG_EXACT, np.random.default_rng(n), 100_000)
    th = np.quantile(pilot, [0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    est = estimate_outage(cfg, Combiner.FG_EXACT, th, 1_000_000, RngStream(2024, 200 + n))
    bound = np.asarray(logged(fg_cdf, cfg, th, "C4 FG bound"))
    emp = np.array([e.mean for e in est])
    se = np.array([e.std_error for e in est])
    return bool(np.all(emp >= bound - 3 * se)), float(np.mean(emp - bound))


def test_c4_bound_direction(accept):
    ok2, gap2 = fg_gap(2)
    ok3, gap3 = fg_gap(3)
    verdict(accept, "C4 bound direction N=2,3", ok2 and ok3, f"pointwise N=2 {ok2}, N=3 {ok3}")
    verdict(accept, "C4 gap growth", gap3 > gap2, f"mean gap N=2 {gap2:.4f}, N=3 {gap3:.4f}")


# ---------------------------------------------------------------------------
# 5. BER paths
# ---------------------------------------------------------------------------

BER_GRID_DB = np.arange(0.0, 45.0 + 1e-9, 5.0)
# well inside the 1e-3 criterion; CA and downlink CDFs are complements, so at
# high SNR their absolute rounding level limits the attainable relative accuracy
QUAD_TOL = 1e-4


def ber_rows(closed, quad):
    worst = 0.0
    for x in BER_GRID_DB:
        c, q = closed(10 ** (x / 10)), quad(10 ** (x / 10))
        worst = max(worst, abs(c - q) / abs(q))
    return worst


def multihop_at(mean, relaying):
    g0 = mean / TABLE_HOP.moment(1.0, 1.0)
    return MultihopConfig((TABLE_HOP, TABLE_HOP), (g0, g0), relaying)


@pytest.mark.parametrize("path", ["CA", "FG", "uplink", "downlink"])
def test_c5_ber_paths(accept, path):
    if path == "CA":
        closed = lambda m: ca_avg_ber(multihop_at(m, Relaying.CA), DBPSK)
        quad = lambda m: avg_ber_from_cdf(lambda g: ca_cdf(multihop_at(m, Relaying.CA), g),
                                          DBPSK, tol=QUAD_TOL, gamma_ref=m)
    elif path == "FG":
        closed = lambda m: fg_avg_ber(multihop_at(m, Relaying.FG), DBPSK)
        quad = lambda m: avg_ber_from_cdf(lambda g: fg_cdf(multihop_at(m, Relaying.FG), g),
                                          DBPSK, tol=QUAD_TOL, gamma_ref=m)
    elif path == "uplink":
        closed = lambda m: uplink_avg_ber(mixed(TABLE_HOP, TABLE_ACCESS, m, Direction.UPLINK),
                                          DBPSK)

        def quad(m):
            cfg = mixed(TABLE_HOP, TABLE_ACCESS, m, Direction.UPLINK)
            pb = avg_ber_from_cdf(lambda g: ca_cdf(cfg.backhaul, g), DBPSK, tol=QUAD_TOL,
                                  gamma_ref=m)
            pa = avg_ber_from_cdf(lambda g: access_snr_cdf(cfg.access, cfg.gamma0_access, g),
                                  DBPSK, tol=QUAD_TOL, gamma_ref=m)
            return pb + pa - pb * pa
    else:
        closed = lambda m: dl_avg_ber(mixed(TABLE_HOP, TABLE_ACCESS, m, Direction.DOWNLINK),
                                      DBPSK)
        quad = lambda m: avg_ber_from_cdf(
            lambda g: dl_cdf(mixed(TABLE_HOP, TABLE_ACCESS, m, Direction.DOWNLINK), g),
            DBPSK, tol=QUAD_TOL, gamma_ref=m)
    worst = quiet(ber_rows, closed, quad)
    verdict(accept, f"C5 BER {path}", worst <= 1e-3, f"max rel diff {worst:.2e} over 10 SNRs")


def test_c5_rayleigh_dbpsk(accept):
    worst = 0.0
    for x in BER_GRID_DB:
        g0 = 10 ** (x / 10)
        q = avg_ber_from_cdf(lambda g: -np.expm1(-np.asarray(g) / g0), DBPSK, gamma_ref=g0)
        worst = max(worst, abs(q - 0.5 / (1 + g0)) / (0.5 / (1 + g0)),
                    abs(rayleigh_dbpsk_ber(g0) - 0.5 / (1 + g0)))
    verdict(accept, "C5 Rayleigh DBPSK", worst <= 1e-6, f"max rel diff {worst:.2e}")


# ---------------------------------------------------------------------------
# 7. asymptotes (before 6 so the convergence log is complete)
# ---------------------------------------------------------------------------


def test_c7_asymptotes(accept):
    sc, at = shipped()
    top = max(sc.ptx_dbm)
    ca = at(top)
    fg = replace(ca, relaying=Relaying.FG)
    mean = 10 ** 6.0
    up = mixed(TABLE_HOP, TABLE_ACCESS, mean, Direction.UPLINK)
    dl = mixed(TABLE_HOP, TABLE_ACCESS, mean, Direction.DOWNLINK)
    ratios = {
        "CA": float(ca_outage_asymptotic(ca, sc.gamma_th))
        / float(logged(ca_cdf, ca, sc.gamma_th, "C7 CA")),
        "FG": float(fg_outage_asymptotic(fg, sc.gamma_th))
        / float(logged(fg_cdf, fg, sc.gamma_th, "C7 FG")),
        "uplink": float(uplink_outage_asymptotic(up, 1.0)) / float(uplink_outage(up, 1.0)),
        "downlink": float(quiet(dl_outage_asymptotic, dl, 1.0))
        / float(logged(dl_cdf, dl, 1.0, "C7 downlink")),
    }
    for name, r in ratios.items():
        verdict(accept, f"C7 asymptote {name}", 0.9 <= r <= 1.1, f"ratio {r:.4f}")


# ---------------------------------------------------------------------------
# 6. identity corpus and contour convergence
# ---------------------------------------------------------------------------


def test_c6_identity_corpus(accept):
    worst, bad = 0.0, []
    for name, value, oracle in CASES:
        v, o = value(), oracle()
        err = abs(v - o) / abs(o)
        worst = max(worst, err)
        if err > 1e-8:
            bad.append(name)
    verdict(accept, "C6 identity corpus", not bad and len(CASES) == 20,
            f"{len(CASES)} cases, worst rel err {worst:.1e}" + (f", failing {bad}" if bad else ""))


def test_c6_contour_convergence(accept):
    if not CONTOUR_LOG:
        sc, at = shipped()
        logged(ca_cdf, at(max(sc.ptx_dbm)), sc.gamma_th, "C6 CA")
    bad = [t for t, info in CONTOUR_LOG if info is None or info.rel_change > 1e-10]
    worst = max(info.rel_change for _, info in CONTOUR_LOG if info is not None)
    verdict(accept, "C6 node doubling", not bad,
            f"{len(CONTOUR_LOG)} evaluations, worst rel change {worst:.1e}")


# ---------------------------------------------------------------------------
# 8. four-hop fixed gain vs direct link
# ---------------------------------------------------------------------------


def test_c8_multihop_gain(accept):
    s_cap, phi = pointing_params(PointingGeometry(0.1, 0.6, 0.05))
    direct = ThzHop(2.0, 1.2, phi, s_cap, dist_m=100.0)
    sc = load_scenario(default_scenario_path())
    ptx = 30.0 - 10 * math.log10(avg_snr(direct, sc.budget.with_ptx(0.0)))
    budget = sc.budget.with_ptx(ptx)
    p_direct = float(hop_snr_cdf(direct, avg_snr(direct, budget), 1.0))
    hops = tuple(replace(direct, dist_m=25.0) for _ in range(4))
    chain = MultihopConfig(hops, tuple(avg_snr(h, budget) for h in hops), Relaying.FG)
    est = estimate_outage(chain, Combiner.FG_EXACT, 1.0, 1_000_000, RngStream(2024, 300))
    ratio = p_direct / max(est.mean + 3 * est.std_error, 1e-300)
    verdict(accept, "C8 4-hop FG 100x", ratio >= 100,
            f"direct {p_direct:.3e}, 4-hop {est.mean:.3e} +/- {est.std_error:.1e}, "
            f"ratio (at +3 se) {ratio:.2f}", known_fail=True)


# ---------------------------------------------------------------------------
# 9. sampler goodness of fit
# ---------------------------------------------------------------------------

N_SAMPLES = 1_000_000


def chi2_p(observed, expected):
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    exp = exp * obs.sum() / exp.sum()
    return stats.chisquare(obs, exp).pvalue


def test_c9_alpha_mu_chi2(accept):
    alpha, mu, omega = 2.0, 2.0, 1.0
    r = sample_alpha_mu(alpha, mu, omega, np.random.default_rng(91), N_SAMPLES)
    q = np.linspace(0, 1, 51)[1:-1]
    edges = np.concatenate([[0.0], omega * (special.gammaincinv(mu, q) / mu) ** (1 / alpha),
                            [np.inf]])
    obs = np.histogram(r, edges)[0]
    p = chi2_p(obs, np.full(50, N_SAMPLES / 50))
    verdict(accept, "C9 chi2 alpha-mu", p > 0.01, f"p = {p:.3f}")


def test_c9_pointing_chi2(accept):
    s_cap, phi = S_CAP, 37.0
    h = sample_pointing(s_cap, phi, np.random.default_rng(92), N_SAMPLES)
    edges = np.linspace(0.0, s_cap, 51)
    cdf = (edges / s_cap) ** phi
    p = chi2_p(np.histogram(h, edges)[0], N_SAMPLES * np.diff(cdf))
    verdict(accept, "C9 chi2 pointing", p > 0.01, f"p = {p:.3f}")


def test_c9_generalized_k_chi2(accept):
    mo, mg, b = 0.75, 1.0, 1.3
    x = sample_generalized_k(mo, mg, b, np.random.default_rng(93), N_SAMPLES)
    edges = np.concatenate([[0.0], np.geomspace(1e-4, 30.0, 60), [np.inf]])
    pdf = lambda t: generalized_k_pdf(t, mo, mg, b)
    probs = np.array([integrate.quad(pdf, a, c, limit=200)[0] for a, c in zip(edges, edges[1:])])
    p = chi2_p(np.histogram(x, edges)[0], N_SAMPLES * probs)
    verdict(accept, "C9 chi2 generalized-K", p > 0.01, f"p = {p:.3f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
