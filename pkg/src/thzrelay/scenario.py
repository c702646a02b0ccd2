"""Scenario files: INI sections with units spelled out in the key names."""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analytic.common import Direction, MixedConfig, MultihopConfig, Relaying
from .channel import (REFERENCE_K_ABS_300GHZ, AccessLink, LinkBudget, Modulation,
                      PointingGeometry, ThzHop, avg_snr, db_to_linear, pointing_params)

METHODS = ("exact", "bound", "asymptotic", "mc")


class ScenarioError(ValueError):
    """Parse or validation failure; the message names the section and key."""


@dataclass(frozen=True)
class Scenario:
    budget: LinkBudget
    hops: tuple
    relaying: Relaying
    access: AccessLink | None
    direction: Direction
    modulation: Modulation
    ptx_dbm: tuple
    gamma_th_db: float
    methods: tuple = ("exact",)
    paper_literal: bool = False
    samples: int = 1_000_000
    seed: int = 2024
    digest: str = ""
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def gamma_th(self) -> float:
        return float(db_to_linear(self.gamma_th_db))

    @property
    def n(self) -> int:
        return len(self.hops)

    def config_at(self, ptx_dbm: float):
        """Evaluator configuration at one transmit power."""
        b = self.budget.with_ptx(ptx_dbm)
        g0 = tuple(avg_snr(h, b) for h in self.hops)
        bh = MultihopConfig(self.hops, g0, self.relaying, paper_literal=self.paper_literal)
        if self.access is None:
            return bh
        acc = replace(self.access, p_a_dbm=ptx_dbm)
        g0_a = 1.0 / db_to_linear(b.noise_power_dbm)
        return MixedConfig(bh, acc, g0_a, self.direction, carrier_hz=b.carrier_hz)

    def gamma0_db(self, ptx_dbm: float) -> float:
        """Average SNR of the first backhaul hop."""
        return 10.0 * math.log10(avg_snr(self.hops[0], self.budget.with_ptx(ptx_dbm)))


def _get(sec: configparser.SectionProxy, key: str, kind=float, default=None, required=False):
    if key not in sec:
        if required:
            raise ScenarioError(f"[{sec.name}] missing required key '{key}'")
        return default
    raw = sec.get(key)
    try:
        if kind is bool:
            return sec.getboolean(key)
        return kind(raw)
    except ValueError as exc:
        raise ScenarioError(f"[{sec.name}] {key} = {raw!r}: {exc}") from None


def _positive(name: str, value: float):
    if not value > 0:
        raise ScenarioError(f"{name} must be positive (got {value})")
    return value


def _pointing(sec, prefix: str = ""):
    """(S, phi) from explicit values or from the aperture/beam/jitter geometry."""
    r = _get(sec, "aperture_radius_m")
    ratio = _get(sec, "beam_ratio")
    jitter = _get(sec, prefix + "jitter_sigma_m")
    s_geo = phi_geo = None
    if r is not None and ratio is not None:
        _positive(f"[{sec.name}] aperture_radius_m", r)
        _positive(f"[{sec.name}] beam_ratio", ratio)
        geom = PointingGeometry(r, ratio * r, jitter if jitter else 1.0)
        s_geo, phi_geo = pointing_params(geom)
        if not jitter:
            phi_geo = None
    s_cap = _get(sec, prefix + "s_cap", default=s_geo)
    phi = _get(sec, prefix + "phi", default=phi_geo)
    if s_cap is None:
        raise ScenarioError(f"[{sec.name}] needs {prefix}s_cap or aperture_radius_m + beam_ratio")
    if phi is None:
        raise ScenarioError(f"[{sec.name}] needs {prefix}phi or {prefix}jitter_sigma_m with geometry")
    return s_cap, phi


def _hop(sec, dist_m: float) -> ThzHop:
    s_cap, phi = _pointing(sec)
    try:
        return ThzHop(alpha=_get(sec, "alpha", required=True), mu=_get(sec, "mu", required=True),
                      phi=phi, s_cap=s_cap, omega=_get(sec, "omega", default=1.0),
                      dist_m=_positive(f"[{sec.name}] distance_m", dist_m),
                      k_abs=_get(sec, "k_abs_per_m", default=REFERENCE_K_ABS_300GHZ),
                      gt_dbi=_get(sec, "gain_dbi", default=33.0),
                      gr_dbi=_get(sec, "gain_dbi", default=33.0))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"[{sec.name}] {exc}") from None


def _modulation(cp) -> Modulation:
    if "modulation" not in cp:
        return Modulation.dbpsk()
    sec = cp["modulation"]
    scheme = sec.get("scheme", "dbpsk").strip().lower()
    if scheme in ("dbpsk", "bpsk", "qpsk"):
        return getattr(Modulation, scheme)()
    if scheme != "custom":
        raise ScenarioError(f"[modulation] unknown scheme {scheme!r}")
    q = tuple(float(v) for v in sec.get("q_list", "1").split(","))
    return Modulation(_get(sec, "delta", required=True), _get(sec, "p", required=True), q)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    for name in ("link_budget", "sweep", "backhaul"):
        if name not in cp:
            raise ScenarioError(f"{source}: missing section [{name}]")

    lb = cp["link_budget"]
    budget = LinkBudget(noise_psd_dbm_hz=_get(lb, "noise_psd_dbm_per_hz", default=-174.0),
                        bandwidth_hz=_positive("bandwidth_hz", _get(lb, "bandwidth_hz", default=10e9)),
                        noise_figure_db=_get(lb, "noise_figure_db", default=5.0),
                        carrier_hz=_positive("carrier_hz", _get(lb, "carrier_hz", default=300e9)))

    sw = cp["sweep"]
    start = _get(sw, "ptx_start_dbm", required=True)
    stop = _get(sw, "ptx_stop_dbm", required=True)
    step = _positive("[sweep] ptx_step_db", _get(sw, "ptx_step_db", default=5.0))
    if stop < start:
        raise ScenarioError("[sweep] empty range: ptx_stop_dbm < ptx_start_dbm")
    ptx = tuple(float(v) for v in np.round(np.arange(start, stop + 0.5 * step, step), 10))

    bh = cp["backhaul"]
    n = _get(bh, "hops", int, required=True)
    if n < 1:
        raise ScenarioError("[backhaul] hops must be at least 1")
    total = _get(bh, "total_distance_m", required=True)
    _positive("[backhaul] total_distance_m", total)
    relaying = _get(bh, "relaying", str, default="CA").strip().upper()
    if relaying not in ("CA", "FG"):
        raise ScenarioError(f"[backhaul] relaying must be CA or FG (got {relaying})")
    hops = []
    for i in range(1, n + 1):
        sec_name = f"hop.{i}"
        if sec_name in cp:
            merged = configparser.ConfigParser()
            merged.read_dict({sec_name: {**dict(bh), **dict(cp[sec_name])}})
            sec = merged[sec_name]
        else:
            sec = bh
        hops.append(_hop(sec, _get(sec, "distance_m", default=total / n)))

    access, direction = None, Direction.UPLINK
    if "access" in cp and _get(cp["access"], "enabled", bool, default=True):
        ac = cp["access"]
        direction = Direction(_get(ac, "direction", str, default="uplink").strip().lower())
        s_a, phi_a = _pointing(ac)
        try:
            access = AccessLink(m_g=_get(ac, "m_g", required=True),
                                sigma_db=_get(ac, "sigma_db", required=True),
                                phi_a=phi_a, s_a=s_a, d_a=_get(ac, "distance_m", default=20.0),
                                k_a=_get(ac, "k_abs_per_m", default=REFERENCE_K_ABS_300GHZ),
                                g_a_dbi=_get(ac, "gain_dbi", default=10.0),
                                eta=_get(ac, "path_loss_exponent", default=2.0))
        except ValueError as exc:
            raise ScenarioError(f"[access] {exc}") from None
        if direction is Direction.DOWNLINK and relaying != "FG":
            raise ScenarioError("[access] downlink requires [backhaul] relaying = FG")

    methods, literal, samples, seed = ("exact",), False, 1_000_000, 2024
    if "method" in cp:
        me = cp["method"]
        methods = tuple(m.strip() for m in me.get("methods", "exact").split(",") if m.strip())
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise ScenarioError(f"[method] unknown methods {bad}; choose from {METHODS}")
        literal = _get(me, "paper_literal", bool, default=False)
    if "montecarlo" in cp:
        mc = cp["montecarlo"]
        samples = _get(mc, "samples", int, default=samples)
        seed = _get(mc, "seed", int, default=seed)

    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
    sc = Scenario(budget, tuple(hops), Relaying(relaying), access, direction, _modulation(cp),
                  ptx, _get(sw, "gamma_th_db", default=0.0), methods, literal, samples, seed,
                  digest)
    object.__setattr__(sc, "provenance", _provenance(sc, source))
    return sc


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {p}: {exc}") from None
    return parse_scenario(text, str(p))


def _provenance(sc: Scenario, source: str) -> dict:
    out = {"source": source, "scenario_hash": sc.digest,
           "noise_power_dbm": round(sc.budget.noise_power_dbm, 6),
           "relaying": sc.relaying.value, "hops": sc.n}
    for i, h in enumerate(sc.hops, 1):
        out[f"hop{i}"] = (f"alpha={h.alpha:g} mu={h.mu:g} phi={h.phi:.6g} S={h.s_cap:.6g} "
                          f"d={h.dist_m:g}m k={h.k_abs:.6g}/m")
    if sc.access is not None:
        a = sc.access
        out["access"] = (f"{sc.direction.value} m_g={a.m_g:g} sigma_db={a.sigma_db:g} "
                         f"m_omega={a.m_omega:.6g} phi_A={a.phi_a:.6g} S_A={a.s_a:.6g} "
                         f"d={a.d_a:g}m")
    return out


def default_scenario_path() -> Path:
    return Path(__file__).with_name("data") / "table2_backhaul.cfg"
