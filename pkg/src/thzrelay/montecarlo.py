"""Monte Carlo oracle for the hop, access and end-to-end SNRs.

Samples are produced in fixed blocks; block ``k`` of stream ``(seed, stream_id)``
always comes from the same generator, so any partition of ``[0, n)`` into
shards reproduces the same draws. Sums are accumulated exactly (as integers
scaled by a power of two), which makes the merged estimate independent of
how the work was split.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .analytic.common import Direction, MixedConfig, MultihopConfig, Relaying
from .channel import AccessLink, Modulation, ThzHop, b_coefficient

BLOCK = 1 << 16
MIN_SAMPLES = 10_000
_SHIFT = 1200  # 2**-1074 * 2**_SHIFT is an integer


class Combiner(str, enum.Enum):
    """End-to-end SNR from per-hop draws."""

    CA = "ca"  # (sum 1/gamma_i)^-1
    FG_EXACT = "fg_exact"  # (sum_i prod_{j<=i} psi_{j-1}/gamma_j)^-1, psi_0 = 1
    FG_BOUND = "fg_bound"  # (1/N) prod zeta_i gamma_i^(l_i/N)
    UPLINK = "uplink"  # min(gamma_CA, gamma_A)
    DOWNLINK = "downlink"  # gamma_N gamma_A / (psi + gamma_A), gamma_N from FG_EXACT
    DOWNLINK_BOUND = "downlink_bound"  # same with gamma_N from FG_BOUND


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")

    def block(self, k: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, k))
        return np.random.Generator(np.random.PCG64(ss))

    def generator(self) -> np.random.Generator:
        return self.block(0)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")

    def ci(self, z: float = 1.96) -> tuple:
        return self.mean - z * self.std_error, self.mean + z * self.std_error


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def sample_alpha_mu(alpha: float, mu: float, omega: float, rng: np.random.Generator,
                    size=None):
    """Amplitude r = omega (g/mu)^(1/alpha), g ~ Gamma(mu, 1)."""
    if not (alpha > 0 and mu > 0 and omega > 0):
        raise ValueError("alpha, mu and omega must be positive")
    return omega * (rng.standard_gamma(mu, size) / mu) ** (1.0 / alpha)


def sample_pointing(s_cap: float, phi: float, rng: np.random.Generator, size=None):
    """Pointing gain S u^(1/phi), density phi h^(phi-1) / S^phi on [0, S]."""
    if not 0 < s_cap <= 1:
        raise ValueError("s_cap must lie in (0, 1]")
    if not phi > 0:
        raise ValueError("phi must be positive")
    return s_cap * rng.random(size) ** (1.0 / phi)


def sample_generalized_k(m_omega: float, m_g: float, b: float, rng: np.random.Generator,
                         size=None):
    """Power |h_k|^2 = g1 g2 / b^2 with g1 ~ Gamma(m_omega), g2 ~ Gamma(m_g)."""
    if not (m_omega > 0 and m_g > 0 and b > 0):
        raise ValueError("m_omega, m_g and b must be positive")
    return rng.standard_gamma(m_omega, size) * rng.standard_gamma(m_g, size) / b ** 2


def sample_hop_snr(hop: ThzHop, gamma0: float, rng: np.random.Generator, size=None):
    hf = sample_alpha_mu(hop.alpha, hop.mu, hop.omega, rng, size)
    hp = sample_pointing(hop.s_cap, hop.phi, rng, size)
    return gamma0 * (hp * hf) ** 2


def sample_access_snr(link: AccessLink, gamma0: float, rng: np.random.Generator, size=None,
                      carrier_hz: float = 300e9):
    hk2 = sample_generalized_k(link.m_omega, link.m_g, b_coefficient(link, carrier_hz), rng, size)
    hp = sample_pointing(link.s_a, link.phi_a, rng, size)
    return gamma0 * hp ** 2 * hk2


# ---------------------------------------------------------------------------
# end-to-end SNR
# ---------------------------------------------------------------------------


def _combine_ca(g: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 1.0 / np.sum(1.0 / g, axis=0)


def _combine_fg_exact(g: np.ndarray, psi: Sequence[float]) -> np.ndarray:
    acc = np.zeros(g.shape[1])
    prod = np.ones(g.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(g.shape[0]):
            prod = prod * (1.0 if i == 0 else psi[i - 1]) / g[i]
            acc = acc + prod
        return 1.0 / acc


def _combine_fg_bound(g: np.ndarray, cfg: MultihopConfig) -> np.ndarray:
    n = cfg.n
    logv = -math.log(n) + np.zeros(g.shape[1])
    with np.errstate(divide="ignore"):
        for gi, z, l in zip(g, cfg.zeta_list, cfg.l_list):
            logv = logv + math.log(z) + l / n * np.log(gi)
    return np.exp(logv)


def _hop_draws(cfg: MultihopConfig, rng, size) -> np.ndarray:
    return np.stack([sample_hop_snr(h, g0, rng, size) for h, g0 in zip(cfg.hops, cfg.gamma0s)])


def _check_combiner(cfg, combiner: Combiner):
    mixed = combiner in (Combiner.UPLINK, Combiner.DOWNLINK, Combiner.DOWNLINK_BOUND)
    if mixed != isinstance(cfg, MixedConfig):
        raise TypeError(f"combiner {combiner.value} does not match {type(cfg).__name__}")
    if mixed:
        want = Direction.UPLINK if combiner is Combiner.UPLINK else Direction.DOWNLINK
        if cfg.direction is not want:
            raise TypeError(f"combiner {combiner.value} used on a {cfg.direction.value} config")


def default_combiner(cfg) -> Combiner:
    if isinstance(cfg, MixedConfig):
        return Combiner.UPLINK if cfg.direction is Direction.UPLINK else Combiner.DOWNLINK
    return Combiner.CA if cfg.relaying is Relaying.CA else Combiner.FG_EXACT


def simulate_snr(cfg, combiner, rng: np.random.Generator, size: int = 1, *,
                 psi: float | None = None) -> np.ndarray:
    """End-to-end SNR draws. ``psi`` overrides the downlink fixed gain."""
    combiner = Combiner(combiner)
    _check_combiner(cfg, combiner)
    if combiner is Combiner.CA:
        return _combine_ca(_hop_draws(cfg, rng, size))
    if combiner is Combiner.FG_EXACT:
        return _combine_fg_exact(_hop_draws(cfg, rng, size), cfg.relay_psi)
    if combiner is Combiner.FG_BOUND:
        return _combine_fg_bound(_hop_draws(cfg, rng, size), cfg)
    bh = cfg.backhaul
    g = _hop_draws(bh, rng, size)
    ga = sample_access_snr(cfg.access, cfg.gamma0_access, rng, size, cfg.carrier_hz)
    if combiner is Combiner.UPLINK:
        gb = _combine_ca(g) if bh.relaying is Relaying.CA else _combine_fg_exact(g, bh.relay_psi)
        return np.minimum(gb, ga)
    gn = _combine_fg_exact(g, bh.relay_psi) if combiner is Combiner.DOWNLINK \
        else _combine_fg_bound(g, bh)
    p = cfg.resolved_psi if psi is None else float(psi)
    return gn * ga / (p + ga)


def simulate_coupled(cfg: MultihopConfig, rng: np.random.Generator, size: int):
    """FG exact and bound SNRs driven by the same per-hop draws."""
    g = _hop_draws(cfg, rng, size)
    return _combine_fg_exact(g, cfg.relay_psi), _combine_fg_bound(g, cfg)


# ---------------------------------------------------------------------------
# exact accumulation and estimators
# ---------------------------------------------------------------------------


def _exact_int_sum(v: np.ndarray) -> int:
    """sum(v) * 2**_SHIFT exactly, for finite float64 values."""
    v = np.asarray(v, float).ravel()
    if v.size == 0:
        return 0
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite value in accumulation")
    m, e = np.frexp(v)
    mi = np.ldexp(m, 53).astype(np.int64)  # exact: |m| in [0.5, 1)
    total = 0
    for ex in np.unique(e):
        sel = mi[e == ex]
        hi = int(np.sum(sel >> 26))
        lo = int(np.sum(sel & ((1 << 26) - 1)))
        s = (hi << 26) + lo
        k = int(ex) - 53 + _SHIFT
        total += s << k if k >= 0 else s >> -k
    return total


def _exact_square_parts(v: np.ndarray) -> tuple:
    """(p, err) with p + err = v*v exactly (Veltkamp split, Dekker product)."""
    v = np.asarray(v, float)
    c = 134217729.0 * v
    hi = c - (c - v)
    lo = v - hi
    p = v * v
    err = ((hi * hi - p) + 2.0 * hi * lo) + lo * lo
    return p, err


@dataclass(frozen=True)
class Accumulator:
    """Exact sufficient statistics of a shard."""

    n: int = 0
    s1: int = 0
    s2: int = 0

    @classmethod
    def of(cls, v: np.ndarray) -> "Accumulator":
        v = np.asarray(v, float)
        p, err = _exact_square_parts(v)
        return cls(v.size, _exact_int_sum(v), _exact_int_sum(p) + _exact_int_sum(err))

    def __add__(self, other: "Accumulator") -> "Accumulator":
        return Accumulator(self.n + other.n, self.s1 + other.s1, self.s2 + other.s2)

    def estimate(self) -> Estimate:
        if self.n < 1:
            raise ValueError("empty accumulator")
        scale = 1 << _SHIFT
        mean = Fraction(self.s1, scale * self.n)
        if self.n > 1:
            var = (Fraction(self.s2, scale) - self.n * mean * mean) / (self.n - 1)
            se = math.sqrt(max(float(var), 0.0) / self.n)
        else:
            se = 0.0
        return Estimate(float(mean), se, self.n)


def merge(accs: Sequence[Accumulator]) -> Estimate:
    total = Accumulator()
    for a in accs:
        total = total + a
    return total.estimate()


def _blocks(start: int, stop: int):
    k = start // BLOCK
    while k * BLOCK < stop:
        lo = max(start, k * BLOCK) - k * BLOCK
        hi = min(stop, (k + 1) * BLOCK) - k * BLOCK
        yield k, lo, hi
        k += 1


def _shard_values(cfg, combiner, stream: RngStream, start: int, stop: int,
                  statistic: Callable) -> list:
    """Per-threshold accumulators for samples [start, stop)."""
    out = None
    for k, lo, hi in _blocks(start, stop):
        g = simulate_snr(cfg, combiner, stream.block(k), BLOCK)[lo:hi]
        stats = [Accumulator.of(x) for x in statistic(g)]
        out = stats if out is None else [a + b for a, b in zip(out, stats)]
    return out


def _run(cfg, combiner, stream, n, statistic, shards, workers):
    bounds = [(i * n) // shards for i in range(shards + 1)]
    jobs = [(cfg, combiner, stream, a, b, statistic) for a, b in zip(bounds[:-1], bounds[1:])
            if b > a]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_shard_values, *zip(*jobs)))
    else:
        parts = [_shard_values(*j) for j in jobs]
    return [merge(col) for col in zip(*parts)]


class _Below:
    def __init__(self, th):
        self.th = th

    def __call__(self, g):
        return [(g < t).astype(float) for t in self.th]


class _Bep:
    def __init__(self, mod: Modulation):
        self.mod = mod

    def __call__(self, g):
        return [self.mod.conditional_bep(g)]


def _check_n(n: int):
    if n < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are required")


def estimate_outage(cfg, combiner, gamma_th, n: int, rng: RngStream, *, shards: int = 1,
                    workers: int = 1):
    """P(gamma < gamma_th) with standard error; list of Estimates for array thresholds."""
    _check_n(n)
    th = np.atleast_1d(np.asarray(gamma_th, float))
    res = _run(cfg, Combiner(combiner), rng, n, _Below(th), shards, workers)
    return res[0] if np.ndim(gamma_th) == 0 else res


def estimate_ber(cfg, combiner, mod: Modulation, n: int, rng: RngStream, *, shards: int = 1,
                 workers: int = 1) -> Estimate:
    """Mean conditional bit-error probability delta/(2 Gamma(p)) sum Gamma(p, q_n gamma).

    Averaging the conditional probability over the SNR draws (rather than
    simulating bits) integrates the noise out analytically; by parts,
    E[P_e(gamma)] = delta/(2 Gamma(p)) sum q^p int g^(p-1) e^(-q g) F(g) dg.
    """
    _check_n(n)
    return _run(cfg, Combiner(combiner), rng, n, _Bep(mod), shards, workers)[0]


def shard_outage(cfg, combiner, gamma_th, start: int, stop: int, rng: RngStream) -> list:
    th = np.atleast_1d(np.asarray(gamma_th, float))
    return _shard_values(cfg, Combiner(combiner), rng, start, stop, _Below(th))


# ---------------------------------------------------------------------------
# goodness of fit
# ---------------------------------------------------------------------------


class EmpiricalCDF:
    def __init__(self, samples):
        self.x = np.sort(np.asarray(samples, float).ravel())
        if self.x.size == 0:
            raise ValueError("no samples")

    @property
    def n(self) -> int:
        return self.x.size

    def __call__(self, t):
        return np.searchsorted(self.x, np.asarray(t, float), side="right") / self.n


def empirical_cdf(samples) -> EmpiricalCDF:
    return EmpiricalCDF(samples)


def ks_distance(empirical, analytic) -> float:
    """sup |F_emp - F| over the jump points of the empirical CDF.

    ``analytic`` may be a callable CDF or another empirical CDF.
    """
    e = empirical if isinstance(empirical, EmpiricalCDF) else EmpiricalCDF(empirical)
    if isinstance(analytic, (EmpiricalCDF, np.ndarray, list)):
        o = analytic if isinstance(analytic, EmpiricalCDF) else EmpiricalCDF(analytic)
        pts = np.concatenate([e.x, o.x])
        return float(np.max(np.abs(e(pts) - o(pts))))
    f = np.asarray(analytic(e.x), float)
    hi = np.arange(1, e.n + 1) / e.n
    lo = np.arange(0, e.n) / e.n
    return float(max(np.max(np.abs(hi - f)), np.max(np.abs(f - lo))))


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample Kolmogorov critical value."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)
