"""Command-line sweeps, validation and diversity reports."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from .analytic.common import Direction, MixedConfig, ProbabilityRangeError, Relaying
from .channel import access_snr_cdf, access_snr_pdf
from .scenario import Scenario, ScenarioError, default_scenario_path, load_scenario
from .specfun import ContourError, ConvergenceError, GammaPoleError

CSV_HEADER = ("ptx_dbm", "gamma0_db", "metric", "value", "std_error", "method")
DIAGNOSTICS = (ProbabilityRangeError, ContourError, ConvergenceError, GammaPoleError,
               ArithmeticError)
EXIT_OK, EXIT_FAIL, EXIT_DIAG = 0, 1, 2


class EvaluatorDiagnostic(RuntimeError):
    """An evaluator failed at a specific sweep point."""


@dataclass(frozen=True)
class CurvePoint:
    ptx_dbm: float
    gamma0_db: float
    metric: str
    value: float
    std_error: float | None
    method: str


# ---------------------------------------------------------------------------
# evaluation dispatch
# ---------------------------------------------------------------------------


def analytic_tag(cfg) -> str:
    """'exact' when the closed form is exact for this configuration, else 'bound'."""
    bh = cfg.backhaul if isinstance(cfg, MixedConfig) else cfg
    if bh.relaying is Relaying.FG and bh.n > 1:
        return "bound"
    return "exact"


def analytic_outage(cfg, gamma_th):
    if isinstance(cfg, MixedConfig):
        if cfg.direction is Direction.UPLINK:
            return an.uplink_outage(cfg, gamma_th)
        return an.dl_cdf(cfg, gamma_th)
    return an.ca_cdf(cfg, gamma_th) if cfg.relaying is Relaying.CA else an.fg_cdf(cfg, gamma_th)


def asymptotic_outage(cfg, gamma_th):
    if isinstance(cfg, MixedConfig):
        if cfg.direction is Direction.UPLINK:
            return an.uplink_outage_asymptotic(cfg, gamma_th)
        return an.dl_outage_asymptotic(cfg, gamma_th)
    if cfg.relaying is Relaying.CA:
        return an.ca_outage_asymptotic(cfg, gamma_th)
    return an.fg_outage_asymptotic(cfg, gamma_th)


def analytic_ber(cfg, mod):
    if isinstance(cfg, MixedConfig):
        if cfg.direction is Direction.UPLINK:
            return an.uplink_avg_ber(cfg, mod)
        return an.dl_avg_ber(cfg, mod)
    return an.ca_avg_ber(cfg, mod) if cfg.relaying is Relaying.CA else an.fg_avg_ber(cfg, mod)


def analytic_pdf(cfg, gamma):
    g = np.asarray(gamma, float)
    if isinstance(cfg, MixedConfig):
        if cfg.direction is Direction.DOWNLINK:
            return an.dl_pdf(cfg, g)
        bh = cfg.backhaul
        fb = an.ca_pdf(bh, g) if bh.relaying is Relaying.CA else an.fg_pdf(bh, g)
        fa = access_snr_pdf(cfg.access, cfg.gamma0_access, g, cfg.carrier_hz)
        cb = analytic_outage(bh, g)
        ca = access_snr_cdf(cfg.access, cfg.gamma0_access, g, cfg.carrier_hz)
        return fb * (1.0 - ca) + fa * (1.0 - cb)
    return an.ca_pdf(cfg, g) if cfg.relaying is Relaying.CA else an.fg_pdf(cfg, g)


def validation_combiner(cfg) -> mc.Combiner:
    """Simulated SNR that the closed form describes (the bound SNR for FG chains)."""
    if isinstance(cfg, MixedConfig):
        if cfg.direction is Direction.UPLINK:
            return mc.Combiner.UPLINK
        return mc.Combiner.DOWNLINK_BOUND if cfg.backhaul.n > 1 else mc.Combiner.DOWNLINK
    if cfg.relaying is Relaying.CA:
        return mc.Combiner.CA
    return mc.Combiner.FG_BOUND if cfg.n > 1 else mc.Combiner.FG_EXACT


def _point(args):
    sc, ptx, idx, metric, method, samples, seed = args
    cfg = sc.config_at(ptx)
    g0db = sc.gamma0_db(ptx)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if method in ("exact", "bound"):
                tag = analytic_tag(cfg)
                if metric == "outage":
                    val = float(analytic_outage(cfg, sc.gamma_th))
                else:
                    val = float(analytic_ber(cfg, sc.modulation))
                return CurvePoint(ptx, g0db, metric, val, None, tag)
            if method == "asymptotic":
                if metric != "outage":
                    return None
                return CurvePoint(ptx, g0db, metric, float(asymptotic_outage(cfg, sc.gamma_th)),
                                  None, "asymptotic")
            stream = mc.RngStream(seed, idx)
            comb = mc.default_combiner(cfg)
            if metric == "outage":
                est = mc.estimate_outage(cfg, comb, sc.gamma_th, samples, stream)
            else:
                est = mc.estimate_ber(cfg, comb, sc.modulation, samples, stream)
            return CurvePoint(ptx, g0db, metric, est.mean, est.std_error, "mc")
    except DIAGNOSTICS as exc:
        raise EvaluatorDiagnostic(f"{metric}/{method} at ptx={ptx} dBm: "
                                  f"{type(exc).__name__}: {exc}") from exc


def run_sweep(sc: Scenario, metric: str, methods=None, samples: int | None = None,
              seed: int | None = None, workers: int = 1) -> list:
    methods = tuple(methods or sc.methods)
    if "exact" in methods and "bound" in methods:
        methods = tuple(m for m in methods if m != "bound")
    samples = sc.samples if samples is None else samples
    seed = sc.seed if seed is None else seed
    jobs = [(sc, ptx, i, metric, m, samples, seed)
            for m in methods for i, ptx in enumerate(sc.ptx_dbm)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            pts = list(ex.map(_point, jobs))
    else:
        pts = [_point(j) for j in jobs]
    return [p for p in pts if p is not None]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def provenance_lines(sc: Scenario, extra: dict | None = None) -> list:
    info = dict(sc.provenance)
    info.update(extra or {})
    return [f"# {k}: {v}" for k, v in info.items()]


def emit_csv(points, path, comments=()) -> Path:
    path = Path(path)
    buf = io.StringIO()
    for c in comments:
        buf.write(c.rstrip("\n") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in points:
        w.writerow([_fmt(p.ptx_dbm), _fmt(p.gamma0_db), p.metric, _fmt(p.value),
                    _fmt(p.std_error), p.method])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path) -> list:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header")
    out = []
    for r in rows[1:]:
        out.append(CurvePoint(float(r[0]), float(r[1]), r[2], float(r[3]),
                              float(r[4]) if r[4] else None, r[5]))
    return out


_PLOT_TEMPLATE = '''"""Plot {metric} curves written by thzrelay (log-y against transmit power)."""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
FILES = {files!r}
STYLE = {{"exact": "-", "bound": "-", "asymptotic": "--", "mc": "o"}}


def read(name):
    rows = [ln for ln in (HERE / name).read_text().splitlines() if not ln.startswith("#")]
    data = list(csv.DictReader(rows))
    return [float(r["ptx_dbm"]) for r in data], [float(r["value"]) for r in data], data


fig, ax = plt.subplots(figsize=(6, 4.5))
for name in FILES:
    x, y, data = read(name)
    if not data:
        continue
    method = data[0]["method"]
    pairs = [(a, b) for a, b in zip(x, y) if b > 0]
    if pairs:
        xs, ys = zip(*pairs)
        ax.semilogy(xs, ys, STYLE.get(method, "-"), label=method, fillstyle="none")
ax.set_xlabel("transmit power (dBm)")
ax.set_ylabel({ylabel!r})
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
out = HERE / {png!r}
fig.savefig(out, dpi=120)
print(out)
'''


def emit_plot_script(points, path, csv_files=None) -> Path:
    """Write a stand-alone matplotlib script that renders the CSV files next to it."""
    path = Path(path)
    metric = points[0].metric if points else "outage"
    if csv_files is None:
        csv_files = sorted({f"{p.metric}_{p.method}.csv" for p in points})
    ylabel = "outage probability" if metric == "outage" else "average BER"
    path.write_text(_PLOT_TEMPLATE.format(metric=metric, files=list(csv_files), ylabel=ylabel,
                                          png=path.stem + ".png"), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# validate / diversity / pdf-dump
# ---------------------------------------------------------------------------


def run_validate(sc: Scenario, samples: int, seed: int, rel_tol: float = 0.05,
                 floor: float = 1e-3, ks_samples: int = 20_000) -> dict:
    """Closed form against simulation of the SNR it describes, at every sweep point."""
    rows, ok = [], True
    for i, ptx in enumerate(sc.ptx_dbm):
        cfg = sc.config_at(ptx)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            a = float(analytic_outage(cfg, sc.gamma_th))
        comb = validation_combiner(cfg)
        est = mc.estimate_outage(cfg, comb, sc.gamma_th, samples, mc.RngStream(seed, i))
        diff = abs(a - est.mean)
        tol = max(3.0 * est.std_error, rel_tol * a)
        checked = a >= floor
        passed = (diff <= tol) if checked else True
        ok &= passed
        rows.append({"ptx_dbm": ptx, "analytic": a, "mc": est.mean, "std_error": est.std_error,
                     "abs_diff": diff, "tolerance": tol, "checked": checked, "pass": passed,
                     "combiner": comb.value})
    mid = sc.ptx_dbm[len(sc.ptx_dbm) // 2]
    cfg = sc.config_at(mid)
    comb = validation_combiner(cfg)
    g = mc.simulate_snr(cfg, comb, mc.RngStream(seed, 10_000).generator(), ks_samples)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ks = mc.ks_distance(g, interpolated_cdf(lambda x: analytic_outage(cfg, x), g))
    crit = mc.ks_critical(ks_samples, 0.01)
    ok &= ks <= crit
    return {"pass": bool(ok), "max_abs_diff": max(r["abs_diff"] for r in rows),
            "ks_ptx_dbm": mid, "ks_statistic": ks, "ks_critical_1pct": crit,
            "samples": samples, "seed": seed, "points": rows}


def interpolated_cdf(cdf, samples, nodes: int = 400):
    """Piecewise-linear interpolant of ``cdf`` in log(gamma) across the sample range."""
    g = np.asarray(samples, float)
    g = g[g > 0]
    y = np.linspace(math.log(g.min()) - 1e-3, math.log(g.max()) + 1e-3, nodes)
    vals = np.maximum.accumulate(np.clip(np.asarray(cdf(np.exp(y)), float), 0.0, 1.0))

    def out(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore"):
            return np.interp(np.log(x), y, vals, left=0.0, right=1.0)

    return out


def fit_slope(ptx_dbm, outage) -> float:
    """-d log10(P_out) / d log10(SNR) by least squares (SNR proportional to transmit power)."""
    x = np.asarray(ptx_dbm, float) / 10.0
    y = np.log10(np.asarray(outage, float))
    return float(-np.polyfit(x, y, 1)[0])


def formula_diversity(cfg) -> float:
    if isinstance(cfg, MixedConfig):
        return (an.uplink_diversity(cfg) if cfg.direction is Direction.UPLINK
                else an.dl_diversity(cfg))
    return an.diversity_multihop(cfg)


def exact_diversity(cfg) -> float:
    if isinstance(cfg, MixedConfig):
        return (an.uplink_diversity_exact(cfg) if cfg.direction is Direction.UPLINK
                else an.dl_diversity_exact(cfg))
    return an.ca_diversity_exact(cfg) if cfg.relaying is Relaying.CA else an.fg_bound_diversity(cfg)


def run_diversity(sc: Scenario, top_db: float = 20.0) -> dict:
    top = max(sc.ptx_dbm)
    pts = [p for p in sc.ptx_dbm if p >= top - top_db - 1e-9]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        vals = [float(analytic_outage(sc.config_at(p), sc.gamma_th)) for p in pts]
        cfg = sc.config_at(top)
        form = formula_diversity(cfg)
        exact = exact_diversity(cfg)
    return {"fitted_slope": fit_slope(pts, vals), "formula": form, "exact_asymptotic": exact,
            "ptx_dbm": pts, "outage": vals}


def run_pdf_dump(sc: Scenario, ptx: float, samples: int, seed: int, bins: int = 60) -> list:
    cfg = sc.config_at(ptx)
    g = mc.simulate_snr(cfg, mc.default_combiner(cfg), mc.RngStream(seed, 20_000).generator(),
                       samples)
    g = g[g > 0]
    lo, hi = np.quantile(g, [0.001, 0.999])
    edges = np.geomspace(lo, hi, bins + 1)
    counts, _ = np.histogram(g, edges)
    width = np.diff(edges)
    centre = np.sqrt(edges[1:] * edges[:-1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pdf = np.asarray(analytic_pdf(cfg, centre), float)
    rows = []
    n = samples
    for c, p, k, w in zip(centre, pdf, counts, width):
        rows.append((c, p, None, analytic_tag(cfg)))
        rows.append((c, k / (n * w), math.sqrt(k) / (n * w), "mc"))
    return rows


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _env_int(name: str):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"environment variable {name}={raw!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thzrelay", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("outage", "outage probability sweep"),
                        ("ber", "average bit-error-rate sweep"),
                        ("validate", "closed forms against Monte Carlo"),
                        ("diversity", "fitted high-SNR slope against the diversity formula"),
                        ("pdf-dump", "end-to-end SNR density: closed form and histogram")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--scenario", type=Path, default=None,
                       help="scenario file (default: the shipped two-hop backhaul)")
        s.add_argument("--method", default=None,
                       help="comma list of exact, bound, asymptotic, mc (default: scenario)")
        s.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
        s.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--paper-literal", action="store_true",
                       help="use the expressions exactly as printed where they differ")
        s.add_argument("--workers", type=int, default=1, help="parallel sweep points")
        if name == "pdf-dump":
            s.add_argument("--ptx", type=float, default=None, help="transmit power in dBm")
    return p


def _resolve(args):
    sc = load_scenario(args.scenario or default_scenario_path())
    if args.paper_literal and not sc.paper_literal:
        sc = replace(sc, paper_literal=True)
        object.__setattr__(sc, "provenance", {**sc.provenance, "paper_literal": True})
    samples = args.samples if args.samples is not None else _env_int("THZRELAY_SAMPLES")
    seed = args.seed if args.seed is not None else _env_int("THZRELAY_SEED")
    samples = sc.samples if samples is None else samples
    seed = sc.seed if seed is None else seed
    if samples < mc.MIN_SAMPLES:
        raise ScenarioError(f"--samples must be at least {mc.MIN_SAMPLES}")
    methods = sc.methods
    if args.method:
        methods = tuple(m.strip() for m in args.method.split(",") if m.strip())
        bad = [m for m in methods if m not in ("exact", "bound", "asymptotic", "mc")]
        if bad:
            raise ScenarioError(f"unknown --method {bad}")
    return sc, samples, seed, methods


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc, samples, seed, methods = _resolve(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_DIAG
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    head = provenance_lines(sc, {"command": args.command, "methods": ",".join(methods),
                                 "paper_literal": sc.paper_literal, "samples": samples,
                                 "seed": seed})
    try:
        if args.command in ("outage", "ber"):
            pts = run_sweep(sc, args.command, methods, samples, seed, args.workers)
            files = []
            for m in dict.fromkeys(p.method for p in pts):
                f = emit_csv([p for p in pts if p.method == m], out / f"{args.command}_{m}.csv",
                             head)
                files.append(f.name)
                print(f)
            print(emit_plot_script(pts, out / f"plot_{args.command}.py", files))
            return EXIT_OK
        if args.command == "validate":
            rep = run_validate(sc, samples, seed)
            (out / "validate.json").write_text(json.dumps(rep, indent=2) + "\n", encoding="utf-8")
            for r in rep["points"]:
                flag = "PASS" if r["pass"] else "FAIL"
                print(f"{flag} ptx={r['ptx_dbm']:g} dBm analytic={r['analytic']:.6e} "
                      f"mc={r['mc']:.6e} +/- {r['std_error']:.2e}")
            print(f"KS={rep['ks_statistic']:.4g} (1% critical {rep['ks_critical_1pct']:.4g})")
            print("validate:", "PASS" if rep["pass"] else "FAIL")
            return EXIT_OK if rep["pass"] else EXIT_FAIL
        if args.command == "diversity":
            rep = run_diversity(sc)
            (out / "diversity.json").write_text(json.dumps(rep, indent=2) + "\n", encoding="utf-8")
            print(f"fitted slope {rep['fitted_slope']:.4f}  formula {rep['formula']:.4f}  "
                  f"exact asymptotic {rep['exact_asymptotic']:.4f}")
            return EXIT_OK
        ptx = args.ptx if args.ptx is not None else sc.ptx_dbm[len(sc.ptx_dbm) // 2]
        rows = run_pdf_dump(sc, ptx, samples, seed)
        buf = io.StringIO()
        for c in head + [f"# ptx_dbm: {ptx}"]:
            buf.write(c + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("gamma", "value", "std_error", "method"))
        for g, v, se, m in rows:
            w.writerow((_fmt(g), _fmt(v), _fmt(se), m))
        f = out / "pdf.csv"
        f.write_text(buf.getvalue(), encoding="utf-8")
        print(f)
        return EXIT_OK
    except EvaluatorDiagnostic as exc:
        print(f"evaluator diagnostic: {exc}", file=sys.stderr)
        return EXIT_DIAG
    except DIAGNOSTICS as exc:
        print(f"evaluator diagnostic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIAG


if __name__ == "__main__":
    sys.exit(main())
