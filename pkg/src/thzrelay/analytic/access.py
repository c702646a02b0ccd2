"""Shadowed access link: asymptotic outage, average BER and diversity."""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..channel import AccessLink, Modulation, b_coefficient
from ..specfun import ContourConfig, FoxHSpec, fox_h_residues, meijer_g
from .common import as_array, scalar


def access_ber_spec(link: AccessLink, p: float) -> FoxHSpec:
    h = 0.5 * link.phi_a
    return FoxHSpec.meijer(3, 2, [1.0 - p, 1.0, 1.0 + h], [link.m_omega, link.m_g, h, 0.0])


def access_avg_ber(link: AccessLink, gamma0: float, mod: Modulation, carrier_hz: float = 300e9,
                   contour: ContourConfig | None = None) -> float:
    """Average BER of the access link (Meijer G-function per q_n)."""
    beta = link.snr_scale(gamma0, carrier_hz)
    qs = np.asarray(mod.q_list)
    vals = meijer_g(access_ber_spec(link, mod.p), 1.0 / (qs * beta), contour,
                    log_prefactor=link.log_norm())
    val = mod.delta / (2.0 * math.gamma(mod.p)) * float(np.sum(vals))
    return min(max(val, 0.0), 0.5 * mod.delta * mod.k)


def access_cdf_asymptotic(link: AccessLink, gamma0: float, gamma, carrier_hz: float = 300e9,
                          n_poles: int = 3, paper_literal: bool = False):
    """High-SNR expansion of the access CDF from the residues at m_Omega, m_g, phi_A/2."""
    if paper_literal:
        return _access_cdf_asymptotic_literal(link, gamma0, gamma, carrier_hz)
    x = as_array(gamma) / link.snr_scale(gamma0, carrier_hz)
    return fox_h_residues(link.cdf_spec(), x, n_poles, log_prefactor=link.log_norm())


def _access_cdf_asymptotic_literal(link: AccessLink, gamma0: float, gamma, carrier_hz: float):
    """Printed residue sum with b = {m_M, m_M, (phi_A - m_A)/2 ; -m_A/2},
    a = {1 - m_A/2 ; 1 + (phi_A - m_A)/2}. Terms whose gamma factors sit on a
    pole (the repeated m_M) are skipped with a warning."""
    g = as_array(gamma)
    m_a, m_m = link.m_a, link.m_m
    b = b_coefficient(link, carrier_hz)
    h = 0.5 * link.phi_a
    bj = [m_m, m_m, (link.phi_a - m_a) / 2.0, -m_a / 2.0]
    aj = [1.0 - m_a / 2.0, 1.0 + (link.phi_a - m_a) / 2.0]
    m, n = 3, 1
    log_pref = (m_a * math.log(b) + math.log(link.phi_a)
                + ((link.phi_a - m_a) / 2.0 + 1.0) * math.log(link.s_a ** 2)
                - m_a / 2.0 * math.log(gamma0) - math.lgamma(link.m_omega) - math.lgamma(link.m_g))
    total = np.zeros_like(g)
    skipped = []
    for k in range(m):
        try:
            num = 1.0
            for j in range(m):
                if j != k:
                    num *= math.gamma(bj[j] - bj[k])
            for j in range(n):
                num *= math.gamma(1.0 - aj[j] + bj[k])
            den = 1.0
            for j in range(n, len(aj)):
                den *= math.gamma(aj[j] - bj[k])
            for j in range(m, len(bj)):
                den *= math.gamma(1.0 - bj[j] + bj[k])
        except ValueError:
            skipped.append(k)
            continue
        total = total + num / den * (b ** 2 * g / gamma0) ** bj[k]
    if skipped:
        warnings.warn(f"printed access asymptote: terms {skipped} hit gamma poles and were skipped",
                      RuntimeWarning, stacklevel=3)
    return scalar(math.exp(log_pref) * g ** (-m_a / 4.0) * total)


def access_diversity_exact(link: AccessLink) -> float:
    return link.diversity()


def access_diversity_formula(link: AccessLink) -> float:
    """min{m_A/2 + m_M, phi_A/2} as in the closed-form diversity expression."""
    return min(link.m_a / 2.0 + link.m_m, 0.5 * link.phi_a)
