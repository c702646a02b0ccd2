"""Backhaul mixed with the shadowed access link.

Uplink: decode-and-forward, gamma = min(gamma_backhaul, gamma_A).
Downlink: fixed-gain relay, gamma = gamma_N gamma_A / (psi + gamma_A), whose
complementary CDF is a bivariate Mellin-Barnes integral:

    P(gamma > z) = E_N[ 1{gamma_N > z} P(gamma_A > z psi / (gamma_N - z)) ]
                 = (1/2 pi i)^2 int int M_N(r) z^-r / Gamma(1 + r)
                                        M_A(v) Gamma(v) psi^-v Gamma(r - v) dr dv

with 0 < Re v < Re r, where M_N and M_A are the Mellin transforms
(moments) of the two SNRs.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..channel import Modulation, access_snr_cdf, access_snr_pdf
from ..specfun import (ContourConfig, FoxHSpec, LinearGamma, MultiFoxHSpec, fox_h,
                       fox_h_bivariate, fox_h_residues)
from .access import access_avg_ber, access_cdf_asymptotic, access_diversity_formula
from .ber import ca_avg_ber, fg_avg_ber
from .common import (Direction, EvalResult, MixedConfig, Relaying, as_array, check_probability,
                     inverse_mean_spec, log_gauss_grid, scalar)
from .multihop import (ca_cdf, ca_outage_asymptotic, diversity_multihop, fg_bound_diversity,
                       fg_cdf, fg_cdf_spec, fg_log_moment, fg_log_norm, fg_log_scale,
                       fg_moment_pairs, fg_outage_asymptotic, fg_pdf)

DL_CONTOUR = ContourConfig(tolerance=1e-10)
DL_CDF_CONTOUR = ContourConfig(tolerance=1e-10, atol=1e-14)  # complement form


# ---------------------------------------------------------------------------
# uplink
# ---------------------------------------------------------------------------


def _backhaul_cdf(cfg: MixedConfig, gamma):
    if cfg.backhaul.relaying is Relaying.CA:
        return ca_cdf(cfg.backhaul, gamma)
    return fg_cdf(cfg.backhaul, gamma)


def _access_cdf(cfg: MixedConfig, gamma):
    return access_snr_cdf(cfg.access, cfg.gamma0_access, gamma, cfg.carrier_hz)


def uplink_outage(cfg: MixedConfig, gamma_th):
    """F_B + F_A - F_B F_A for gamma = min(gamma_backhaul, gamma_A)."""
    fb = as_array(_backhaul_cdf(cfg, gamma_th))
    fa = as_array(_access_cdf(cfg, gamma_th))
    return check_probability(fb + fa - fb * fa, "uplink outage")


def uplink_outage_asymptotic(cfg: MixedConfig, gamma_th):
    bh = cfg.backhaul
    fb = (ca_outage_asymptotic(bh, gamma_th) if bh.relaying is Relaying.CA
          else fg_outage_asymptotic(bh, gamma_th))
    fa = access_cdf_asymptotic(cfg.access, cfg.gamma0_access, gamma_th, cfg.carrier_hz,
                               paper_literal=bh.paper_literal)
    return scalar(as_array(fb) + as_array(fa))


def uplink_avg_ber(cfg: MixedConfig, mod: Modulation) -> float:
    bh = cfg.backhaul
    pb = ca_avg_ber(bh, mod) if bh.relaying is Relaying.CA else fg_avg_ber(bh, mod)
    pa = access_avg_ber(cfg.access, cfg.gamma0_access, mod, cfg.carrier_hz)
    return pb + pa - pb * pa


def uplink_diversity(cfg: MixedConfig) -> float:
    """min{sum alpha_i mu_i/2, sum phi_i/2, m_A/2 + m_M, phi_A/2}."""
    return min(diversity_multihop(cfg.backhaul), access_diversity_formula(cfg.access))


def uplink_diversity_exact(cfg: MixedConfig) -> float:
    """High-SNR slope of the exact uplink outage: the weakest hop or the access link."""
    bh = cfg.backhaul
    db = (min(h.diversity() for h in bh.hops) if bh.relaying is Relaying.CA
          else fg_bound_diversity(bh))
    return min(db, cfg.access.diversity())


# ---------------------------------------------------------------------------
# downlink
# ---------------------------------------------------------------------------


def psi_fixed_gain(cfg: MixedConfig, contour: ContourConfig | None = None) -> float:
    """psi = 1 / E[1/(1 + gamma_N)] over the (bound) backhaul SNR distribution."""
    num, den = fg_moment_pairs(cfg.backhaul)
    spec = inverse_mean_spec(num, den)
    val = fox_h(spec, math.exp(-fg_log_scale(cfg.backhaul)), contour,
                log_prefactor=fg_log_norm(cfg.backhaul))
    return 1.0 / val


def _dl_blocks(cfg: MixedConfig, kind: str, p: float = 1.0):
    num, den = fg_moment_pairs(cfg.backhaul)
    if kind == "cdf":
        b1 = FoxHSpec(len(num), 0, den + [(1.0, 1.0)], num)
    elif kind == "pdf":
        b1 = FoxHSpec(len(num), 0, den + [(0.0, 1.0)], num)
    else:
        b1 = FoxHSpec(len(num), 1, [(1.0 - p, 1.0)] + den + [(1.0, 1.0)], num)
    a = cfg.access
    h = 0.5 * a.phi_a
    b2 = FoxHSpec(4, 0, [(1.0 + h, 1.0)], [(0.0, 1.0), (a.m_omega, 1.0), (a.m_g, 1.0), (h, 1.0)])
    return MultiFoxHSpec((b1, b2), num=(LinearGamma(0.0, (1.0, -1.0)),))


def _dl_check(cfg: MixedConfig):
    if cfg.direction is not Direction.DOWNLINK:
        raise ValueError("downlink evaluator called on an uplink configuration")


def _dl_log_pref(cfg: MixedConfig) -> float:
    return fg_log_norm(cfg.backhaul) + cfg.access.log_norm()


def dl_cdf(cfg: MixedConfig, gamma, contour: ContourConfig | None = None,
           full_output: bool = False):
    """Downlink outage (exact for a single backhaul hop, bound-based otherwise)."""
    _dl_check(cfg)
    g = as_array(gamma)
    out = np.zeros(g.shape)
    pos = g > 0
    info = None
    if np.any(pos):
        d = math.exp(fg_log_scale(cfg.backhaul))
        x2 = cfg.resolved_psi / cfg.beta_access
        val, info = fox_h_bivariate(_dl_blocks(cfg, "cdf"), g[pos] / d, x2,
                                    contour or DL_CDF_CONTOUR, log_prefactor=_dl_log_pref(cfg),
                                    full_output=True)
        out[pos] = 1.0 - val
    out = check_probability(out, "downlink CDF")
    tag = "exact" if cfg.backhaul.n == 1 else "bound"
    return EvalResult(out, tag, {"contour": info}) if full_output else out


def dl_pdf(cfg: MixedConfig, gamma, contour: ContourConfig | None = None):
    _dl_check(cfg)
    g = as_array(gamma)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        d = math.exp(fg_log_scale(cfg.backhaul))
        x2 = cfg.resolved_psi / cfg.beta_access
        out[pos] = fox_h_bivariate(_dl_blocks(cfg, "pdf"), g[pos] / d, x2,
                                   contour or DL_CONTOUR,
                                   log_prefactor=_dl_log_pref(cfg) - np.log(g[pos]))
    return scalar(out)


def dl_avg_ber(cfg: MixedConfig, mod: Modulation, contour: ContourConfig | None = None) -> float:
    _dl_check(cfg)
    d = math.exp(fg_log_scale(cfg.backhaul))
    qs = np.asarray(mod.q_list)
    x2 = cfg.resolved_psi / cfg.beta_access
    vals = fox_h_bivariate(_dl_blocks(cfg, "ber", mod.p), 1.0 / (qs * d), x2,
                           contour or DL_CONTOUR, log_prefactor=_dl_log_pref(cfg))
    w = mod.delta / (2.0 * math.gamma(mod.p))
    val = 0.5 * mod.delta * mod.k - w * float(np.sum(vals))
    hi = 0.5 * mod.delta * mod.k
    if val < -1e-6 * hi or val > hi * (1 + 1e-6):
        raise ArithmeticError(f"downlink BER {val} outside [0, {hi}]")
    return min(max(val, 0.0), hi)


def _expect(pdf, h_fn, log_lo: float, log_hi: float, tol: float = 1e-6) -> float:
    """int h(g) f(g) dg on a log grid with panel doubling."""
    panels = max(16, int(math.ceil((log_hi - log_lo) / 0.5)))
    prev = None
    for _ in range(6):
        y, wy = log_gauss_grid(log_lo, log_hi, panels)
        g = np.exp(y)
        val = float(np.sum(wy * g * pdf(g) * h_fn(g)))
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
            break
        prev = val
        panels *= 2
    return val


def dl_outage_asymptotic(cfg: MixedConfig, gamma_th):
    """Leading high-SNR downlink outage.

    F(z) = E_A[F_N(z (1 + psi/gamma_A))] exactly. Each algebraic term of the
    backhaul expansion F_N ~ sum_k c_k (y/D)^e_k contributes
    c_k (z/D)^e_k E_A[(1 + psi/gamma_A)^e_k] when that expectation exists
    (e_k below the access diversity); each access term d_k (y/beta_A)^f_k
    contributes d_k (z psi / beta_A)^f_k E_N[gamma_N^-f_k] when f_k is below
    the backhaul diversity. Terms failing their guard are skipped.
    """
    _dl_check(cfg)
    z = np.atleast_1d(as_array(gamma_th))
    bh, acc = cfg.backhaul, cfg.access
    psi, beta_a = cfg.resolved_psi, cfg.beta_access
    d = math.exp(fg_log_scale(bh))
    d_access = acc.diversity()
    d_back = fg_bound_diversity(bh)
    spec_n = fg_cdf_spec(bh)
    _, poles_n, _ = fox_h_residues(spec_n, np.array([1.0]), 2 * bh.n,
                                   log_prefactor=fg_log_norm(bh), return_poles=True)
    poles_a = fox_h_residues(acc.cdf_spec(), np.array([1.0]), 3, log_prefactor=acc.log_norm(),
                             return_poles=True)[1]
    lo_a = math.log(beta_a) + math.log(1e-16) / max(d_access, 1e-3)
    hi_a = math.log(beta_a) + 12.0
    pdf_a = lambda g: access_snr_pdf(acc, cfg.gamma0_access, g, cfg.carrier_hz)
    total = np.zeros(z.shape)
    used = 0
    for k, p in enumerate(poles_n):
        e = -p
        if e >= d_access:
            continue
        for i, zi in enumerate(z):
            def h_fn(g, zi=zi, k=k):
                y = zi * (1.0 + psi / g) / d
                _, _, terms = fox_h_residues(spec_n, y, 2 * bh.n,
                                             log_prefactor=fg_log_norm(bh), return_poles=True)
                return terms[k]
            total[i] += _expect(pdf_a, h_fn, lo_a, hi_a)
        used += 1
    pdf_n = lambda g: fg_pdf(bh, g)
    lo_n = math.log(d) + math.log(1e-16) / max(d_back, 1e-3)
    hi_n = math.log(d) + 12.0
    for k, p in enumerate(poles_a):
        f = -p
        if f >= d_back:
            continue
        for i, zi in enumerate(z):
            def h_fn(g, zi=zi, k=k):
                y = zi * psi / g / beta_a
                _, _, terms = fox_h_residues(acc.cdf_spec(), y, 3, log_prefactor=acc.log_norm(),
                                             return_poles=True)
                return terms[k]
            total[i] += _expect(pdf_n, h_fn, lo_n, hi_n)
        used += 1
    if used == 0:
        warnings.warn("no asymptotic term passed its existence guard (coincident exponents)",
                      RuntimeWarning, stacklevel=2)
    return scalar(total if np.ndim(gamma_th) else total[0])


def dl_diversity(cfg: MixedConfig) -> float:
    """Same closed-form minimum as the uplink."""
    return min(diversity_multihop(cfg.backhaul), access_diversity_formula(cfg.access))


def dl_diversity_exact(cfg: MixedConfig) -> float:
    return min(fg_bound_diversity(cfg.backhaul), cfg.access.diversity())


def dl_backhaul_moment(cfg: MixedConfig, t: float) -> float:
    return float(np.exp(fg_log_moment(cfg.backhaul, t).real))
