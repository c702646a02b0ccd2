"""Configuration types and shared numerics for the performance evaluators."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np
from scipy import special

from ..channel import AccessLink, ThzHop
from ..specfun import ContourConfig, FoxHSpec, fox_h

PROB_SLACK = 1e-6


class Relaying(str, enum.Enum):
    CA = "CA"
    FG = "FG"


class Direction(str, enum.Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"


class ProbabilityRangeError(ArithmeticError):
    """An evaluator produced a probability outside [0, 1] beyond numerical slack."""


@dataclass
class EvalResult:
    value: Any
    method: str = "exact"
    diagnostics: dict = field(default_factory=dict)


def check_probability(value, name: str = "probability", slack: float = PROB_SLACK):
    """Clamp tiny excursions outside [0, 1]; raise on anything larger."""
    v = np.asarray(value, float)
    if np.any(~np.isfinite(v)):
        raise ProbabilityRangeError(f"{name} is not finite: {value}")
    if np.any(v < -slack) or np.any(v > 1.0 + slack):
        bad = v[(v < -slack) | (v > 1.0 + slack)]
        raise ProbabilityRangeError(f"{name} out of [0, 1]: {bad[:5]}")
    v = np.clip(v, 0.0, 1.0)
    return float(v) if v.ndim == 0 else v


def as_array(x):
    return np.asarray(x, float)


def scalar(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class MultihopConfig:
    """N-hop backhaul. ``psi_list[j]`` is the fixed-gain constant of relay j+1
    (used by the exact fixed-gain SNR); when omitted it is computed from the
    statistics of the hop feeding that relay."""

    hops: tuple
    gamma0s: tuple
    relaying: Relaying = Relaying.CA
    psi_list: tuple | None = None
    paper_literal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hops", tuple(self.hops))
        object.__setattr__(self, "gamma0s", tuple(float(g) for g in self.gamma0s))
        object.__setattr__(self, "relaying", Relaying(self.relaying))
        if not self.hops:
            raise ValueError("need at least one hop")
        if len(self.gamma0s) != len(self.hops):
            raise ValueError("one average SNR per hop is required")
        if any(g <= 0 for g in self.gamma0s):
            raise ValueError("average SNRs must be positive")
        if self.psi_list is not None:
            object.__setattr__(self, "psi_list", tuple(float(p) for p in self.psi_list))
            if len(self.psi_list) < self.n - 1:
                raise ValueError("psi_list needs one entry per relay (N-1)")

    @property
    def n(self) -> int:
        return len(self.hops)

    @cached_property
    def l_list(self) -> tuple:
        return tuple(self.n + 1 - i for i in range(1, self.n + 1))

    @cached_property
    def relay_psi(self) -> tuple:
        """Fixed-gain constants psi_1..psi_{N-1} of the relays."""
        if self.psi_list is not None:
            return tuple(self.psi_list[: self.n - 1])
        return tuple(hop_psi(h, g) for h, g in zip(self.hops[:-1], self.gamma0s[:-1]))

    @cached_property
    def zeta_list(self) -> tuple:
        """Per-hop constants of the product bound; zeta_i = psi_i^(-(N-i)/N).

        With ``paper_literal`` the fading constant C_i takes the place of psi_i.
        """
        n = self.n
        out = []
        for i in range(1, n + 1):
            if i == n:
                out.append(1.0)
                continue
            base = self.hops[i - 1].c_const if self.paper_literal else self.relay_psi[i - 1]
            out.append(base ** (-(n - i) / n))
        return tuple(out)

    def with_gamma0s(self, gamma0s) -> "MultihopConfig":
        return MultihopConfig(self.hops, tuple(gamma0s), self.relaying, self.psi_list,
                              self.paper_literal)

    def scaled(self, factor: float) -> "MultihopConfig":
        """Every average SNR multiplied by ``factor``; explicit psi values scale too."""
        psi = None if self.psi_list is None else tuple(p * factor for p in self.psi_list)
        return MultihopConfig(self.hops, tuple(g * factor for g in self.gamma0s),
                              self.relaying, psi, self.paper_literal)


@dataclass(frozen=True)
class MixedConfig:
    """Backhaul plus access link; ``psi`` is the downlink fixed gain of the
    backhaul-to-access relay (computed from the backhaul statistics if omitted)."""

    backhaul: MultihopConfig
    access: AccessLink
    gamma0_access: float
    direction: Direction = Direction.UPLINK
    psi: float | None = None
    carrier_hz: float = 300e9

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.gamma0_access <= 0:
            raise ValueError("gamma0_access must be positive")
        if self.direction is Direction.DOWNLINK and self.backhaul.relaying is not Relaying.FG:
            raise ValueError("downlink requires a fixed-gain backhaul")
        if self.psi is not None and self.psi <= 1.0:
            raise ValueError("psi must exceed 1")

    @cached_property
    def beta_access(self) -> float:
        return self.access.snr_scale(self.gamma0_access, self.carrier_hz)

    @cached_property
    def resolved_psi(self) -> float:
        if self.psi is not None:
            return float(self.psi)
        from .mixed import psi_fixed_gain

        return psi_fixed_gain(self)

    def scaled(self, factor: float) -> "MixedConfig":
        psi = None if self.psi is None else self.psi * factor
        return MixedConfig(self.backhaul.scaled(factor), self.access,
                           self.gamma0_access * factor, self.direction, psi, self.carrier_hz)


# ---------------------------------------------------------------------------
# semi-blind fixed gain
# ---------------------------------------------------------------------------


def inverse_mean_spec(m_lower, upper_non_n) -> FoxHSpec:
    """Kernel of E[1/(1+gamma)] given the moment kernel of gamma.

    ``m_lower`` are the gamma-function pairs of E[gamma^t] (numerator),
    ``upper_non_n`` its denominator pairs; the Mellin pair of 1/(1+y) adds
    Gamma(1+t) Gamma(-t).
    """
    lower = list(m_lower) + [(1.0, 1.0)]
    upper = [(1.0, 1.0)] + list(upper_non_n)
    return FoxHSpec(len(lower), 1, upper, lower)


def hop_psi(hop: ThzHop, gamma0: float, cfg: ContourConfig | None = None) -> float:
    """psi = 1 / E[1/(1+gamma)] for one hop SNR (Mellin-Barnes evaluation)."""
    h = 0.5 * hop.phi
    spec = inverse_mean_spec([(hop.mu, 2.0 / hop.alpha), (h, 1.0)], [(1.0 + h, 1.0)])
    val = fox_h(spec, 1.0 / hop.snr_scale(gamma0), cfg, log_prefactor=hop.log_norm())
    return 1.0 / val


def conditional_bep_weight(mod) -> float:
    return mod.delta / (2.0 * math.gamma(mod.p))


def log_gauss_grid(lo: float, hi: float, panels: int, order: int = 8):
    """Composite Gauss-Legendre nodes/weights in y = log(gamma) on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    y = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wy = (half[:, None] * w[None, :]).ravel()
    return y, wy


def expectation_by_cdf(cdf: Callable, dh: Callable, lo: float, hi: float,
                       tol: float = 1e-8, max_panels: int = 4096) -> float:
    """int dh(g) F(g) dg over g in [e^lo, e^hi] with panel doubling.

    ``dh`` is the derivative weight; ``cdf`` must accept arrays.
    """
    panels = max(8, int(math.ceil((hi - lo) / 0.5)))
    prev = None
    while True:
        y, wy = log_gauss_grid(lo, hi, panels)
        g = np.exp(y)
        val = float(np.sum(wy * g * dh(g) * cdf(g)))
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
            return val
        if panels * 2 > max_panels:
            return val
        prev = val
        panels *= 2


def gamma_tail(p: float, x) -> np.ndarray:
    """Regularised upper incomplete gamma Q(p, x)."""
    return special.gammaincc(p, x)
