"""Channel-assisted (CA) and fixed-gain (FG) multihop backhaul statistics."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import special

from ..channel import ThzHop
from ..specfun import (ContourConfig, DimensionError, FoxHSpec, LinearGamma,
                       MultiFoxHSpec, fox_h, fox_h_multivariate, fox_h_residues,
                       log_gamma_complex)
from .common import (EvalResult, MultihopConfig, as_array, check_probability,
                     scalar)

CA_CONTOUR = ContourConfig(tolerance=1e-10)
# the CDF is 1 - H, so H is only needed to an absolute accuracy
CA_CDF_CONTOUR = ContourConfig(tolerance=1e-10, atol=1e-14)


def _log_a(hop: ThzHop) -> float:
    return (math.log(hop.phi) - hop.phi * math.log(hop.s_cap)
            + hop.phi / hop.alpha * math.log(hop.mu) - hop.phi * math.log(hop.omega)
            - math.lgamma(hop.mu))


# ---------------------------------------------------------------------------
# CA: harmonic-sum SNR
# ---------------------------------------------------------------------------


def _ca_blocks(cfg: MultihopConfig):
    return tuple(FoxHSpec(3, 0, [(1.0, 1.0)],
                          [(h.b_const, 1.0), (0.0, 1.0), (-0.5 * h.phi, 0.5 * h.alpha)])
                 for h in cfg.hops)


def _ca_common(cfg: MultihopConfig, gamma):
    g = as_array(gamma).ravel()
    logk = sum(_log_a(h) - math.log(2.0) - 0.5 * h.phi * math.log(g0)
               for h, g0 in zip(cfg.hops, cfg.gamma0s))
    half_phi = sum(0.5 * h.phi for h in cfg.hops)
    scales = tuple(0.5 * h.alpha for h in cfg.hops)
    xs = np.stack([h.c_const * (g / g0) ** (0.5 * h.alpha)
                   for h, g0 in zip(cfg.hops, cfg.gamma0s)], axis=1)
    return g, logk, half_phi, scales, xs


def _check_cap(cfg: MultihopConfig, contour: ContourConfig):
    if cfg.n > contour.max_vars:
        raise DimensionError(f"CA evaluation of {cfg.n} hops exceeds the {contour.max_vars}-"
                             "variable cap; use the fixed-gain bound (fg_cdf) instead")


def ca_cdf(cfg: MultihopConfig, gamma, contour: ContourConfig | None = None,
           full_output: bool = False):
    """CDF of the CA end-to-end SNR (sum_i 1/gamma_i)^(-1)."""
    contour = contour or CA_CDF_CONTOUR
    _check_cap(cfg, contour)
    shape = np.shape(gamma)
    g, logk, half_phi, scales, xs = _ca_common(cfg, gamma)
    out = np.zeros(g.shape)
    pos = g > 0
    info = None
    if np.any(pos):
        spec = MultiFoxHSpec(_ca_blocks(cfg), den=(LinearGamma(1.0 - half_phi, scales),))
        val, info = fox_h_multivariate(spec, xs[pos], contour,
                                       log_prefactor=logk + half_phi * np.log(g[pos]),
                                       full_output=True)
        out[pos] = 1.0 - val
    out = check_probability(out.reshape(shape), "CA CDF")
    return EvalResult(out, "exact", {"contour": info}) if full_output else out


def ca_pdf(cfg: MultihopConfig, gamma, contour: ContourConfig | None = None):
    """Density of the CA end-to-end SNR."""
    contour = contour or CA_CONTOUR
    _check_cap(cfg, contour)
    shape = np.shape(gamma)
    g, logk, half_phi, scales, xs = _ca_common(cfg, gamma)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        spec = MultiFoxHSpec(_ca_blocks(cfg), den=(LinearGamma(-half_phi, scales),))
        out[pos] = fox_h_multivariate(spec, xs[pos], contour,
                                      log_prefactor=logk + (half_phi - 1.0) * np.log(g[pos]))
    return scalar(out.reshape(shape))


def ca_cdf_special(cfg: MultihopConfig, gamma_th, case: str):
    """Closed forms for two special channels, evaluated exactly as printed.

    ``rayleigh_nope``: alpha=2, mu=1, negligible pointing error,
    1 - prod_i exp(-gamma_th / gamma_i^0). This is the distribution of
    min_i gamma_i, not of the harmonic sum; see ``ca_cdf`` for the latter.

    ``nakagami2_pe2``: alpha=2, mu=2, phi=2. The printed prefactor carries a
    free hop index and is not dimensionless; only available with
    ``cfg.paper_literal`` (hop 1 supplies the free index).
    """
    gt = as_array(gamma_th)
    if case == "rayleigh_nope":
        if any(h.alpha != 2.0 or h.mu != 1.0 for h in cfg.hops):
            raise ValueError("rayleigh_nope needs alpha=2 and mu=1 on every hop")
        rate = sum(1.0 / g0 for g0 in cfg.gamma0s)
        return scalar(-np.expm1(-gt * rate))
    if case == "nakagami2_pe2":
        if any(h.alpha != 2.0 or h.mu != 2.0 or h.phi != 2.0 for h in cfg.hops):
            raise ValueError("nakagami2_pe2 needs alpha=2, mu=2, phi=2 on every hop")
        if not cfg.paper_literal:
            raise ValueError("nakagami2_pe2 is only available in paper-literal mode")
        h1, g1 = cfg.hops[0], cfg.gamma0s[0]
        pref = math.sqrt(math.sqrt(g1)) * math.sqrt(h1.s_cap) / 2.0
        expo = sum(2.0 / (g0 * h.s_cap ** 2) for h, g0 in zip(cfg.hops, cfg.gamma0s))
        warnings.warn("paper-literal closed form with a free hop index; not a distribution",
                      RuntimeWarning, stacklevel=2)
        return scalar(1.0 - pref * np.exp(-gt * expo))
    raise ValueError(f"unknown special case {case!r}")


# ---------------------------------------------------------------------------
# FG: product bound (1/N) prod zeta_i gamma_i^(l_i/N)
# ---------------------------------------------------------------------------


def fg_moment(hop: ThzHop, gamma0: float, r, n: int, l_i: int):
    """E[gamma_i^(r l_i / N)] in the closed form of the A/B/C constants."""
    r = as_array(r)
    x = (2.0 * r * l_i + n * hop.phi) / (n * hop.alpha)
    for arg in (x, x + hop.b_const):
        if np.any((arg <= 0) & (np.round(arg) == arg)):
            raise ValueError("gamma argument at a pole in the moment formula")
    logv = (_log_a(hop) - 0.5 * hop.phi * math.log(gamma0) - math.log(hop.alpha)
            + special.gammaln(x + hop.b_const) - np.log(np.abs(x))
            - x * (math.log(hop.c_const) - 0.5 * hop.alpha * math.log(gamma0)))
    sign = special.gammasgn(x + hop.b_const) * np.sign(x)
    return scalar(sign * np.exp(logv))


def fg_moment_special(hop: ThzHop, gamma0: float, r, n: int, l_i: int, case: str):
    """Special-case moments exactly as printed (paper-literal only).

    ``rayleigh_nope`` raises a negative base to a real power; the magnitude is
    returned and a warning issued.
    """
    r = as_array(r)
    k = r * l_i / n
    if case == "rayleigh_nope":
        base = 1.0 / (hop.omega ** 2 * gamma0)
        warnings.warn("negative base raised to a real power; returning the magnitude",
                      RuntimeWarning, stacklevel=2)
        return scalar(base * np.exp(np.vectorize(math.lgamma)(k + 1.0)) * base ** (k + 1.0))
    if case == "nakagami2_pe2":
        base = 1.0 / (hop.s_cap ** 2 * hop.omega ** 4 * gamma0)
        return scalar(base * np.exp(np.vectorize(math.lgamma)(k + 1.0)) * (2.0 * base) ** (k + 1.0))
    raise ValueError(f"unknown special case {case!r}")


def fg_weights(cfg: MultihopConfig) -> np.ndarray:
    return np.array([2.0 * l / (cfg.n * h.alpha) for h, l in zip(cfg.hops, cfg.l_list)])


def fg_log_scale(cfg: MultihopConfig) -> float:
    """log D: the bound SNR equals D times a parameter-free product variable."""
    n = cfg.n
    log_k = sum(math.log(z) for z in cfg.zeta_list) - math.log(n)
    if cfg.paper_literal:
        log_k = 0.0
    return log_k + sum(l / n * math.log(h.snr_scale(g0))
                       for h, g0, l in zip(cfg.hops, cfg.gamma0s, cfg.l_list))


def fg_log_norm(cfg: MultihopConfig) -> float:
    out = sum(math.log(h.phi / h.alpha) - math.lgamma(h.mu) for h in cfg.hops)
    if cfg.paper_literal:
        out += sum(math.log(z) for z in cfg.zeta_list) - cfg.n * math.log(cfg.n)
    return out


def fg_moment_pairs(cfg: MultihopConfig):
    """(numerator pairs, denominator pairs) of E[gamma_FG^t] / D^t."""
    w = fg_weights(cfg)
    num, den = [], []
    for h, wi in zip(cfg.hops, w):
        num.append((h.mu, wi))
    for h, wi in zip(cfg.hops, w):
        num.append((h.phi / h.alpha, wi))
    for h, wi in zip(cfg.hops, w):
        den.append((1.0 + h.phi / h.alpha, wi))
    return num, den


def fg_pdf_spec(cfg: MultihopConfig) -> FoxHSpec:
    num, den = fg_moment_pairs(cfg)
    return FoxHSpec(len(num), 0, den, num)


def fg_cdf_spec(cfg: MultihopConfig) -> FoxHSpec:
    num, den = fg_moment_pairs(cfg)
    return FoxHSpec(len(num), 1, [(1.0, 1.0)] + den, num + [(0.0, 1.0)])


def fg_log_moment(cfg: MultihopConfig, t):
    """log E[gamma_FG^t] of the bound SNR."""
    t = np.asarray(t, dtype=complex)
    num, den = fg_moment_pairs(cfg)
    out = t * fg_log_scale(cfg) + fg_log_norm(cfg)
    for a, w in num:
        out = out + log_gamma_complex(a + w * t)
    for a, w in den:
        out = out - log_gamma_complex(a + w * t)
    return out


def fg_pdf(cfg: MultihopConfig, gamma, contour: ContourConfig | None = None):
    g = as_array(gamma)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        gp = g[pos]
        out[pos] = fox_h(fg_pdf_spec(cfg), gp / math.exp(fg_log_scale(cfg)), contour,
                         log_prefactor=fg_log_norm(cfg) - np.log(gp))
    return scalar(out)


def fg_cdf(cfg: MultihopConfig, gamma, contour: ContourConfig | None = None,
           full_output: bool = False):
    """CDF of the product-bound SNR; at gamma_th it is the FG outage bound."""
    g = as_array(gamma)
    out = np.zeros(g.shape)
    pos = g > 0
    info = None
    if np.any(pos):
        val, info = fox_h(fg_cdf_spec(cfg), g[pos] / math.exp(fg_log_scale(cfg)), contour,
                          log_prefactor=fg_log_norm(cfg), full_output=True)
        out[pos] = val
    if cfg.paper_literal:
        out = scalar(out)
    else:
        out = check_probability(out, "FG CDF")
    return EvalResult(out, "bound", {"contour": info}) if full_output else out


# ---------------------------------------------------------------------------
# asymptotics and diversity
# ---------------------------------------------------------------------------


def hop_cdf_asymptotic(hop: ThzHop, gamma0: float, gamma, n_poles: int = 2):
    x = as_array(gamma) / hop.snr_scale(gamma0)
    return fox_h_residues(hop.cdf_spec(), x, n_poles, log_prefactor=hop.log_norm())


def ca_outage_asymptotic(cfg: MultihopConfig, gamma_th, n_poles: int = 2):
    """Leading high-SNR outage of CA relaying.

    The reciprocal SNRs add, and their tails are regularly varying, so the
    outage is asymptotically the sum of the per-hop outages, each taken from
    the dominant residues of the hop CDF kernel.
    """
    if cfg.paper_literal:
        return _ca_outage_asymptotic_literal(cfg, gamma_th)
    return scalar(sum(hop_cdf_asymptotic(h, g0, gamma_th, n_poles)
                      for h, g0 in zip(cfg.hops, cfg.gamma0s)))


def _ca_outage_asymptotic_literal(cfg: MultihopConfig, gamma_th):
    """One reading of the printed dominant-pole formula (ambiguous indexing).

    g_i is the rightmost pole of block i; b_ij, B_ij run over the other
    gamma factors of that block; the final power uses g_1.
    """
    gt = as_array(gamma_th)
    blocks = _ca_blocks(cfg)
    g_list, s1 = [], 0.0
    for blk in blocks:
        poles = [(-p.shift / p.scale, j) for j, p in enumerate(blk.lower[: blk.m])]
        gi, ci = max(poles)
        g_list.append(gi)
        prod = 1.0
        for j, p in enumerate(blk.lower[: blk.m]):
            if j != ci:
                prod *= math.gamma(p.shift + p.scale - p.scale * gi)
        s1 += prod
    s2 = sum(math.gamma(2.0 - gi) for gi in g_list)
    half_phi = sum(0.5 * h.phi for h in cfg.hops)
    denom = math.gamma(1.0 - half_phi + sum(0.5 * h.alpha * gi for h, gi in zip(cfg.hops, g_list)))
    logk = sum(_log_a(h) - math.log(2.0) - 0.5 * h.phi * math.log(g0)
               for h, g0 in zip(cfg.hops, cfg.gamma0s))
    xsum = sum(h.c_const * (gt / g0) ** (0.5 * h.alpha) for h, g0 in zip(cfg.hops, cfg.gamma0s))
    return scalar(-np.exp(logk) * gt ** half_phi / denom * s1 / s2 * xsum ** g_list[0])


def fg_outage_asymptotic(cfg: MultihopConfig, gamma_th, n_poles: int | None = None):
    """Residue expansion of the FG bound CDF at its rightmost left poles."""
    if cfg.paper_literal:
        return _fg_outage_asymptotic_literal(cfg, gamma_th)
    n_poles = n_poles or 2 * cfg.n
    x = as_array(gamma_th) / math.exp(fg_log_scale(cfg))
    return fox_h_residues(fg_cdf_spec(cfg), x, n_poles, log_prefactor=fg_log_norm(cfg))


def _fg_outage_asymptotic_literal(cfg: MultihopConfig, gamma_th):
    """Printed two-term expansion; the free exponent index is read as hop 1."""
    gt = as_array(gamma_th)
    n = cfg.n
    pref = 1.0
    for h, z, l in zip(cfg.hops, cfg.zeta_list, cfg.l_list):
        pref *= z * math.exp(_log_a(h)) * h.c_const ** (-h.phi / h.alpha) * n / (2.0 * n * l)
    base = np.ones_like(gt)
    for h, g0, l in zip(cfg.hops, cfg.gamma0s, cfg.l_list):
        base = base * g0 ** (l / n) / h.c_const ** (2.0 * l / (n * h.alpha))
    base = base / gt
    h1, l1 = cfg.hops[0], cfg.l_list[0]

    def gprod(vals):
        out = 1.0
        for v in vals:
            out *= math.gamma(v)
        return out

    t1 = (gprod([-n * h.alpha * h.mu / (2.0 * l) for h, l in zip(cfg.hops, cfg.l_list)])
          * gprod([h.phi / h.alpha - h.mu for h in cfg.hops])
          / (gprod([1.0 + n * h.alpha * h.mu / (2.0 * l) for h, l in zip(cfg.hops, cfg.l_list)])
             * gprod([1.0 + h.phi / h.alpha - h.mu for h in cfg.hops]))
          * base ** (-n * h1.alpha * h1.mu / (2.0 * l1)))
    t2 = (gprod([-n * h.phi / (2.0 * l) for h, l in zip(cfg.hops, cfg.l_list)])
          * gprod([1.0 + h.mu - h.phi / h.alpha for h in cfg.hops])
          / gprod([1.0 + n * h.phi / (2.0 * l) for h, l in zip(cfg.hops, cfg.l_list)])
          * base ** (-n * h1.phi / (2.0 * l1)))
    return scalar(pref * (t1 + t2))


def diversity_multihop(cfg: MultihopConfig) -> float:
    """min{sum_i alpha_i mu_i / 2, sum_i phi_i / 2} (summed-exponent formula)."""
    return min(sum(h.alpha * h.mu for h in cfg.hops) / 2.0, sum(h.phi for h in cfg.hops) / 2.0)


def ca_diversity_exact(cfg: MultihopConfig) -> float:
    """High-SNR outage exponent of the harmonic-sum SNR: the weakest hop."""
    return min(h.diversity() for h in cfg.hops)


def fg_bound_diversity(cfg: MultihopConfig) -> float:
    """Exponent of the product-bound CDF: min_i (N / l_i) * hop diversity."""
    return min(cfg.n / l * h.diversity() for h, l in zip(cfg.hops, cfg.l_list))
