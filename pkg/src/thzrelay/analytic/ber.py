"""Average bit-error rate for the error model
P_e(gamma) = delta / (2 Gamma(p)) * sum_n Gamma(p, q_n gamma).

Integrating by parts against the SNR distribution gives
P_e = delta / (2 Gamma(p)) sum_n q_n^p int gamma^(p-1) exp(-q_n gamma) F(gamma) dgamma,
which ``avg_ber_from_cdf`` evaluates by quadrature. The H-function forms
below close the same integral analytically.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import special

from ..channel import Modulation
from ..specfun import (ContourConfig, ConvergenceError, FoxHSpec, LinearGamma, MultiFoxHSpec,
                       fox_h, fox_h_multivariate)
from .common import MultihopConfig, log_gauss_grid
from .multihop import (CA_CONTOUR, _ca_blocks, _check_cap, _log_a, fg_log_norm,
                       fg_log_scale, fg_moment_pairs)


def _ber_bounds(value: float, mod: Modulation) -> float:
    hi = 0.5 * mod.delta * mod.k
    if value < -1e-6 * hi or value > hi * (1 + 1e-6):
        raise ArithmeticError(f"average BER {value} outside [0, {hi}]")
    return min(max(value, 0.0), hi)


def avg_ber_from_cdf(cdf: Callable, mod: Modulation, tol: float = 1e-7,
                     gamma_ref: float = 1.0, max_panels: int = 8192) -> float:
    """Average BER by composite Gauss-Legendre quadrature in log(gamma).

    ``cdf`` must accept an array of SNRs. The upper limit grows until the
    tail bound delta/(2 Gamma(p)) sum_n Gamma(p, q_n gamma_max) is below 1 % of
    the tolerance (relative to the running estimate); the lower limit shrinks
    until F(gamma_min) gamma_min^p q^p / p is equally negligible.
    """
    w = mod.delta / (2.0 * math.gamma(mod.p))
    qs = np.asarray(mod.q_list)
    qmin, qmax = qs.min(), qs.max()

    def integrand(y):
        g = np.exp(y)
        f = np.asarray(cdf(g), float)
        kern = sum(np.exp(mod.p * np.log(q * g) - q * g) for q in qs)
        return w * kern * f

    def run(lo, hi):
        panels = max(16, int(math.ceil((hi - lo) / 0.25)))
        prev = None
        while True:
            y, wy = log_gauss_grid(lo, hi, panels)
            val = float(np.sum(wy * integrand(y)))
            if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
                return val
            if panels * 2 > max_panels:
                raise ConvergenceError(f"BER quadrature did not converge ({prev} vs {val})")
            prev = val
            panels *= 2

    hi = math.log(special.gammainccinv(mod.p, 1e-18) / qmin) if mod.p > 0 else math.log(50 / qmin)
    hi = max(hi, math.log(50.0 / qmin))
    # start shallow: deep lower-tail CDF values cancel, and the tail check
    # below extends the range only when F(gamma_min) still matters
    lo = min(math.log(gamma_ref), math.log(1.0 / qmax)) - 4.0
    def tail_hi(hi):
        return w * sum(special.gammaincc(mod.p, q * math.exp(hi)) * math.gamma(mod.p)
                       for q in qs)

    def tail_lo(lo):
        f_lo = float(np.asarray(cdf(np.array([math.exp(lo)])), float)[0])
        return w * f_lo * sum((q * math.exp(lo)) ** mod.p / mod.p for q in qs)

    val = run(lo, hi)
    for _ in range(10):
        # widen with the cheap tail bounds first, then redo the quadrature once
        target = 0.01 * tol * max(abs(val), 1e-300)
        moved = False
        for _ in range(40):
            if tail_hi(hi) <= target:
                break
            hi += 2.0
            moved = True
        for _ in range(40):
            if tail_lo(lo) <= target:
                break
            lo -= 4.0
            moved = True
        if not moved:
            break
        val = run(lo, hi)
    return _ber_bounds(val, mod)


def ca_avg_ber(cfg: MultihopConfig, mod: Modulation, contour: ContourConfig | None = None,
               full_output: bool = False):
    """Average BER of CA relaying as a multivariate H-function."""
    contour = contour or CA_CONTOUR
    _check_cap(cfg, contour)
    half_phi = sum(0.5 * h.phi for h in cfg.hops)
    scales = tuple(0.5 * h.alpha for h in cfg.hops)
    spec = MultiFoxHSpec(_ca_blocks(cfg),
                         num=(LinearGamma(mod.p + half_phi, tuple(-s for s in scales)),),
                         den=(LinearGamma(1.0 - half_phi, scales),))
    logk = sum(_log_a(h) - math.log(2.0) - 0.5 * h.phi * math.log(g0)
               for h, g0 in zip(cfg.hops, cfg.gamma0s))
    qs = np.asarray(mod.q_list)
    xs = np.stack([h.c_const / (g0 * qs) ** (0.5 * h.alpha)
                   for h, g0 in zip(cfg.hops, cfg.gamma0s)], axis=1)
    vals, info = fox_h_multivariate(spec, xs, contour, log_prefactor=logk - half_phi * np.log(qs),
                                    full_output=True)
    w = mod.delta / (2.0 * math.gamma(mod.p))
    out = _ber_bounds(0.5 * mod.delta * mod.k - w * float(np.sum(vals)), mod)
    return (out, info) if full_output else out


def fg_ber_spec(cfg: MultihopConfig, p: float) -> FoxHSpec:
    num, den = fg_moment_pairs(cfg)
    return FoxHSpec(len(num), 2, [(1.0 - p, 1.0), (1.0, 1.0)] + den, num + [(0.0, 1.0)])


def fg_avg_ber(cfg: MultihopConfig, mod: Modulation, contour: ContourConfig | None = None):
    """Average BER under the FG product-bound SNR (single-variate H-function)."""
    qs = np.asarray(mod.q_list)
    x = 1.0 / (qs * math.exp(fg_log_scale(cfg)))
    vals = fox_h(fg_ber_spec(cfg, mod.p), x, contour, log_prefactor=fg_log_norm(cfg))
    w = mod.delta / (2.0 * math.gamma(mod.p))
    return _ber_bounds(w * float(np.sum(vals)), mod)


def rayleigh_dbpsk_ber(gamma0: float) -> float:
    """1 / (2 (1 + gamma0)): DBPSK over a Rayleigh-faded link."""
    return 0.5 / (1.0 + gamma0)


__all__ = ["avg_ber_from_cdf", "ca_avg_ber", "fg_avg_ber", "fg_ber_spec", "rayleigh_dbpsk_ber"]
