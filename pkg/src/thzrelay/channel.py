"""THz link model: alpha-mu fading with pointing errors on backhaul hops,
generalized-K shadowed access link, path gain and link budget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .specfun import FoxHSpec, fox_h, meijer_g

SPEED_OF_LIGHT = 299_792_458.0
DB_PER_NEPER_AMPLITUDE = 8.686  # sigma_dB = 8.686 sigma_n

# absorption coefficient (1/m) at 300 GHz, 50 % RH, 101325 Pa, 296 K from the
# simplified two-line water-vapour model plus polynomial continuum
REFERENCE_K_ABS_300GHZ = 5.8268e-4


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, float))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def sigma_n(sigma_db: float) -> float:
    """Log-normal shadowing spread in nepers from its dB value."""
    return sigma_db / DB_PER_NEPER_AMPLITUDE


def m_omega(sigma_db: float) -> float:
    """Gamma shadowing shape matched to a log-normal spread of ``sigma_db`` dB."""
    if sigma_db <= 0:
        raise ValueError("sigma_db must be positive")
    return 1.0 / math.expm1(sigma_n(sigma_db) ** 2)


# ---------------------------------------------------------------------------
# pointing geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointingGeometry:
    aperture_r_m: float
    beam_w_m: float
    jitter_sigma_m: float

    def __post_init__(self):
        for name in ("aperture_r_m", "beam_w_m", "jitter_sigma_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def pointing_params(geom: PointingGeometry) -> tuple[float, float]:
    """(S, phi) for a Gaussian beam on a circular aperture with radial jitter.

    phi is the squared equivalent-beamwidth to jitter ratio, the exponent of
    the misalignment gain density f(h) = phi h^(phi-1) / S^phi.
    """
    v = math.sqrt(math.pi / 2.0) * geom.aperture_r_m / geom.beam_w_m
    erf_v = math.erf(v)
    s_cap = erf_v ** 2
    w_eq2 = geom.beam_w_m ** 2 * math.sqrt(math.pi) * erf_v / (2.0 * v * math.exp(-v * v))
    phi = w_eq2 / (4.0 * geom.jitter_sigma_m ** 2)
    return s_cap, phi


def jitter_for_phi(aperture_r_m: float, beam_w_m: float, phi: float) -> float:
    """Jitter standard deviation that yields pointing ratio ``phi``."""
    _, phi1 = pointing_params(PointingGeometry(aperture_r_m, beam_w_m, 1.0))
    return math.sqrt(phi1 / phi)


# ---------------------------------------------------------------------------
# backhaul hop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThzHop:
    """One backhaul hop: alpha-mu fading times zero-boresight pointing gain."""

    alpha: float
    mu: float
    phi: float
    s_cap: float
    omega: float = 1.0
    dist_m: float = 20.0
    k_abs: float = REFERENCE_K_ABS_300GHZ
    gt_dbi: float = 33.0
    gr_dbi: float = 33.0

    def __post_init__(self):
        for name in ("alpha", "mu", "phi", "omega", "dist_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.s_cap <= 1:
            raise ValueError("s_cap must lie in (0, 1]")
        if self.k_abs < 0:
            raise ValueError("k_abs must be non-negative")

    @property
    def a_const(self) -> float:
        return (self.phi * self.s_cap ** -self.phi * self.mu ** (self.phi / self.alpha)
                / (self.omega ** self.phi * math.gamma(self.mu)))

    @property
    def b_const(self) -> float:
        return (self.alpha * self.mu - self.phi) / self.alpha

    @property
    def b_negative(self) -> bool:
        """Flag for phi > alpha mu: B < 0 moves the poles of the hop kernel."""
        return self.b_const < 0

    @property
    def c_const(self) -> float:
        return self.mu / self.omega ** self.alpha * self.s_cap ** -self.alpha

    def snr_scale(self, gamma0: float) -> float:
        """beta with gamma = beta * g^(2/alpha) * (h_p/S)^2, g ~ Gamma(mu, 1)."""
        return gamma0 * self.c_const ** (-2.0 / self.alpha)

    def log_moment(self, gamma0: float, t):
        """log E[gamma^t] for the hop SNR at average SNR ``gamma0``."""
        t = np.asarray(t, dtype=complex)
        h = 0.5 * self.phi
        out = (t * math.log(self.snr_scale(gamma0))
               + special.loggamma(self.mu + 2.0 * t / self.alpha) - special.gammaln(self.mu)
               + math.log(h) - np.log(h + t))
        return out

    def moment(self, gamma0: float, t):
        t_arr = np.asarray(t, float)
        if np.any(t_arr <= -min(self.alpha * self.mu, self.phi) / 2.0):
            return _scalar(np.where(t_arr <= -min(self.alpha * self.mu, self.phi) / 2.0,
                                    np.inf, np.exp(self.log_moment(gamma0, t_arr).real)))
        return _scalar(np.exp(self.log_moment(gamma0, t_arr).real))

    def diversity(self) -> float:
        return min(self.alpha * self.mu, self.phi) / 2.0

    # H-function kernels in the variable gamma / beta
    def pdf_spec(self) -> FoxHSpec:
        h = 0.5 * self.phi
        return FoxHSpec(2, 0, [(1.0 + h, 1.0)], [(self.mu, 2.0 / self.alpha), (h, 1.0)])

    def cdf_spec(self) -> FoxHSpec:
        h = 0.5 * self.phi
        return FoxHSpec(2, 1, [(1.0, 1.0), (1.0 + h, 1.0)],
                        [(self.mu, 2.0 / self.alpha), (h, 1.0), (0.0, 1.0)])

    def log_norm(self) -> float:
        return math.log(0.5 * self.phi) - math.lgamma(self.mu)


def path_gain(hop: ThzHop, carrier_hz: float) -> float:
    """Amplitude path gain including free-space spreading and absorption."""
    if hop.dist_m <= 0 or carrier_hz <= 0:
        raise ValueError("distance and carrier must be positive")
    g = math.sqrt(db_to_linear(hop.gt_dbi) * db_to_linear(hop.gr_dbi))
    return (SPEED_OF_LIGHT * g / (4.0 * math.pi * carrier_hz * hop.dist_m)
            * math.exp(-0.5 * hop.k_abs * hop.dist_m))


@dataclass(frozen=True)
class LinkBudget:
    ptx_dbm: float = 30.0
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e9
    noise_figure_db: float = 5.0
    carrier_hz: float = 300e9

    @property
    def noise_power_dbm(self) -> float:
        return self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    def with_ptx(self, ptx_dbm: float) -> "LinkBudget":
        return LinkBudget(ptx_dbm, self.noise_psd_dbm_hz, self.bandwidth_hz,
                          self.noise_figure_db, self.carrier_hz)


def avg_snr(hop: ThzHop, budget: LinkBudget) -> float:
    """Linear average SNR P |h_l|^2 / sigma_w^2 (powers in mW)."""
    return float(db_to_linear(budget.ptx_dbm - budget.noise_power_dbm)
                 * path_gain(hop, budget.carrier_hz) ** 2)


def hop_snr_pdf(hop: ThzHop, gamma0: float, gamma):
    """Density of the hop SNR gamma = gamma0 |h_p h_f|^2."""
    g = np.asarray(gamma, float)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        gp = g[pos]
        x = hop.c_const * (gp / gamma0) ** (hop.alpha / 2.0)
        logpref = (math.log(hop.a_const / 2.0) - 0.5 * hop.phi * math.log(gamma0)
                   + (0.5 * hop.phi - 1.0) * np.log(gp))
        spec = FoxHSpec.meijer(2, 0, [1.0], [hop.b_const, 0.0])
        out[pos] = meijer_g(spec, x, log_prefactor=logpref)
    return _scalar(out)


def hop_snr_cdf(hop: ThzHop, gamma0: float, gamma):
    """Distribution function of the hop SNR."""
    g = np.asarray(gamma, float)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        x = g[pos] / hop.snr_scale(gamma0)
        out[pos] = fox_h(hop.cdf_spec(), x, log_prefactor=hop.log_norm())
    return _scalar(np.clip(out, 0.0, 1.0))


# ---------------------------------------------------------------------------
# access link
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccessLink:
    """Generalized-K shadowed access link with pointing errors."""

    m_g: float
    sigma_db: float
    phi_a: float
    s_a: float
    d_a: float = 20.0
    k_a: float = REFERENCE_K_ABS_300GHZ
    g_a_dbi: float = 33.0
    p_a_dbm: float = 30.0
    eta: float = 2.0

    def __post_init__(self):
        for name in ("m_g", "sigma_db", "phi_a", "d_a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.s_a <= 1:
            raise ValueError("s_a must lie in (0, 1]")

    @property
    def m_omega(self) -> float:
        return m_omega(self.sigma_db)

    @property
    def m_a(self) -> float:
        return self.m_omega + self.m_g

    @property
    def m_m(self) -> float:
        return self.m_omega - self.m_g

    def snr_scale(self, gamma0: float, carrier_hz: float = 300e9) -> float:
        """beta_A: gamma_A = beta_A * g1 * g2 * u^(2/phi_A) with unit-scale gammas."""
        return gamma0 * self.s_a ** 2 / b_coefficient(self, carrier_hz) ** 2

    def gamma0_for_mean(self, mean_snr: float, carrier_hz: float = 300e9) -> float:
        """gamma_A^0 giving E[gamma0 |h_k|^2] = ``mean_snr``."""
        return mean_snr * b_coefficient(self, carrier_hz) ** 2 / (self.m_omega * self.m_g)

    def log_moment(self, beta: float, t):
        t = np.asarray(t, dtype=complex)
        h = 0.5 * self.phi_a
        return (t * math.log(beta) + special.loggamma(self.m_omega + t)
                + special.loggamma(self.m_g + t) - special.gammaln(self.m_omega)
                - special.gammaln(self.m_g) + math.log(h) - np.log(h + t))

    def diversity(self) -> float:
        return min(self.m_omega, self.m_g, 0.5 * self.phi_a)

    def pdf_spec(self) -> FoxHSpec:
        h = 0.5 * self.phi_a
        return FoxHSpec.meijer(3, 0, [1.0 + h], [self.m_omega, self.m_g, h])

    def cdf_spec(self) -> FoxHSpec:
        h = 0.5 * self.phi_a
        return FoxHSpec.meijer(3, 1, [1.0, 1.0 + h], [self.m_omega, self.m_g, h, 0.0])

    def log_norm(self) -> float:
        return math.log(0.5 * self.phi_a) - math.lgamma(self.m_omega) - math.lgamma(self.m_g)


def b_coefficient(link: AccessLink, carrier_hz: float = 300e9) -> float:
    """Generalized-K scale b; mean power m_Omega m_g / b^2 equals the mean path gain."""
    varphi = math.exp(link.k_a * link.d_a)
    gain = db_to_linear(link.g_a_dbi) ** 2 * db_to_linear(link.p_a_dbm)
    fspl = (4.0 * math.pi * link.d_a * carrier_hz / SPEED_OF_LIGHT) ** link.eta
    return math.sqrt(link.m_omega * link.m_g * varphi * fspl
                     / (gain * math.exp(sigma_n(link.sigma_db) ** 2 / 2.0)))


def access_snr_pdf(link: AccessLink, gamma0: float, gamma, carrier_hz: float = 300e9):
    g = np.asarray(gamma, float)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        gp = g[pos]
        beta = link.snr_scale(gamma0, carrier_hz)
        out[pos] = meijer_g(link.pdf_spec(), gp / beta, log_prefactor=link.log_norm() - np.log(gp))
    return _scalar(out)


def access_snr_cdf(link: AccessLink, gamma0: float, gamma, carrier_hz: float = 300e9):
    g = np.asarray(gamma, float)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        beta = link.snr_scale(gamma0, carrier_hz)
        out[pos] = meijer_g(link.cdf_spec(), g[pos] / beta, log_prefactor=link.log_norm())
    return _scalar(np.clip(out, 0.0, 1.0))


def generalized_k_pdf(x, m_omega_: float, m_g: float, b: float):
    """Density of |h_k|^2 = g1 g2 / b^2 in closed form via K_nu."""
    x = np.asarray(x, float)
    m_a, m_m = m_omega_ + m_g, m_omega_ - m_g
    logc = math.log(2.0) + m_a * math.log(b) - math.lgamma(m_omega_) - math.lgamma(m_g)
    return _scalar(np.exp(logc + (m_a / 2.0 - 1.0) * np.log(x))
                   * special.kv(abs(m_m), 2.0 * b * np.sqrt(x)))


# ---------------------------------------------------------------------------
# modulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulation:
    """Conditional error probability delta/(2 Gamma(p)) sum_n Gamma(p, q_n gamma)."""

    delta: float
    p: float
    q_list: tuple = field(default=(1.0,))

    def __post_init__(self):
        object.__setattr__(self, "q_list", tuple(float(q) for q in self.q_list))
        if not self.q_list or any(q <= 0 for q in self.q_list):
            raise ValueError("q_list must be non-empty with positive entries")
        if self.p <= 0:
            raise ValueError("p must be positive")

    @property
    def k(self) -> int:
        return len(self.q_list)

    @classmethod
    def dbpsk(cls) -> "Modulation":
        return cls(1.0, 1.0, (1.0,))

    @classmethod
    def bpsk(cls) -> "Modulation":
        return cls(1.0, 0.5, (1.0,))

    @classmethod
    def qpsk(cls) -> "Modulation":
        return cls(1.0, 0.5, (0.5,))

    def conditional_bep(self, gamma):
        g = np.asarray(gamma, float)
        tot = sum(special.gammaincc(self.p, q * g) for q in self.q_list)
        return _scalar(0.5 * self.delta * tot)
