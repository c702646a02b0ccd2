import json
import math
import subprocess
import sys

import numpy as np
import pytest

from thzrelay.cli import (CSV_HEADER, EXIT_DIAG, CurvePoint, emit_csv, emit_plot_script,
                          fit_slope, main, read_csv, run_sweep)
from thzrelay.scenario import ScenarioError, default_scenario_path, load_scenario, parse_scenario

BASE = """
[link_budget]
carrier_hz = 300e9
bandwidth_hz = 10e9
noise_psd_dbm_per_hz = -174
noise_figure_db = 5

[sweep]
ptx_start_dbm = 0
ptx_stop_dbm = 20
ptx_step_db = 10
gamma_th_db = 0

[backhaul]
hops = {hops}
relaying = {relaying}
total_distance_m = {dist}
alpha = 2
mu = {mu}
aperture_radius_m = 0.1
beam_ratio = 6
jitter_sigma_m = 0.05
gain_dbi = 33
"""


def scenario_text(hops=1, relaying="CA", dist=20, mu=2, extra=""):
    return BASE.format(hops=hops, relaying=relaying, dist=dist, mu=mu) + extra


def write(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def test_shipped_scenario_echoes_table_values():
    sc = load_scenario(default_scenario_path())
    assert sc.n == 2
    assert all(h.phi == 37.0 for h in sc.hops)
    assert "phi=37" in sc.provenance["hop1"]
    assert sc.budget.noise_power_dbm == pytest.approx(-69.0)
    assert len(sc.digest) == 16


def test_missing_mu_is_named():
    text = scenario_text().replace("mu = 2\n", "")
    with pytest.raises(ScenarioError, match="mu"):
        parse_scenario(text)


def test_negative_distance_is_named():
    with pytest.raises(ScenarioError, match="total_distance_m"):
        parse_scenario(scenario_text(dist=-5))


def test_hop_override_and_empty_sweep():
    sc = parse_scenario(scenario_text(hops=2, extra="[hop.2]\nmu = 1.2\ndistance_m = 5\n"))
    assert sc.hops[0].mu == 2.0 and sc.hops[1].mu == 1.2 and sc.hops[1].dist_m == 5.0
    bad = scenario_text().replace("ptx_stop_dbm = 20", "ptx_stop_dbm = -10")
    with pytest.raises(ScenarioError, match="empty range"):
        parse_scenario(bad)


def test_downlink_requires_fixed_gain():
    extra = ("[access]\ndirection = downlink\nm_g = 1\nsigma_db = 2\nphi = 14.5\n"
             "aperture_radius_m = 0.1\nbeam_ratio = 6\n")
    with pytest.raises(ScenarioError, match="relaying = FG"):
        parse_scenario(scenario_text(extra=extra))
    sc = parse_scenario(scenario_text(relaying="FG", extra=extra))
    assert sc.access.phi_a == 14.5 and sc.access.g_a_dbi == 10.0


# ---------------------------------------------------------------------------
# CSV and plot script
# ---------------------------------------------------------------------------


def test_empty_points_give_header_only(tmp_path):
    f = emit_csv([], tmp_path / "e.csv")
    assert f.read_text(encoding="utf-8") == ",".join(CSV_HEADER) + "\n"


def test_csv_round_trip(tmp_path):
    pts = [CurvePoint(0.0, 31.5, "outage", 0.123456789012345, None, "exact"),
           CurvePoint(5.0, 36.5, "outage", 1.5e-7, 2.5e-9, "mc")]
    f = emit_csv(pts, tmp_path / "r.csv", ["# note: x"])
    text = f.read_bytes().decode("utf-8")
    assert text.endswith("\n") and "\r" not in text
    assert read_csv(f) == pts


def test_fig2a_style_curve_is_monotone():
    sc = parse_scenario(scenario_text(hops=4, relaying="FG", dist=100, mu=1.2))
    pts = run_sweep(sc, "outage", ("bound",))
    vals = [p.value for p in pts]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_fit_slope():
    ptx = np.arange(0, 40, 2.0)
    assert fit_slope(ptx, 10 ** (-0.75 * ptx / 10)) == pytest.approx(0.75)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def test_outage_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv("THZRELAY_SEED", raising=False)
    cfg = write(tmp_path, scenario_text())
    for d in ("a", "b"):
        assert main(["outage", "--scenario", str(cfg), "--method", "exact,mc",
                     "--samples", "20000", "--seed", "3", "--out", str(tmp_path / d)]) == 0
    for name in ("outage_exact.csv", "outage_mc.csv", "plot_outage.py"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    text = (tmp_path / "a" / "outage_mc.csv").read_text(encoding="utf-8")
    assert "# scenario_hash:" in text and "# methods: exact,mc" in text


def test_env_overrides(tmp_path, monkeypatch):
    cfg = write(tmp_path, scenario_text())
    monkeypatch.setenv("THZRELAY_SAMPLES", "12345")
    monkeypatch.setenv("THZRELAY_SEED", "99")
    assert main(["ber", "--scenario", str(cfg), "--method", "mc", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "ber_mc.csv").read_text(encoding="utf-8")
    assert "# samples: 12345" in text and "# seed: 99" in text
    assert main(["ber", "--scenario", str(cfg), "--method", "mc", "--seed", "5",
                 "--out", str(tmp_path)]) == 0
    assert "# seed: 5" in (tmp_path / "ber_mc.csv").read_text(encoding="utf-8")


def test_scenario_errors_exit_nonzero(tmp_path, capsys):
    cfg = write(tmp_path, scenario_text(dist=-1))
    assert main(["outage", "--scenario", str(cfg), "--out", str(tmp_path)]) == EXIT_DIAG
    assert "total_distance_m" in capsys.readouterr().err
    assert main(["outage", "--scenario", str(tmp_path / "missing.cfg")]) == EXIT_DIAG


def test_evaluator_diagnostic_exits_nonzero(tmp_path, monkeypatch):
    import thzrelay.cli as cli
    from thzrelay.specfun import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("forced")

    monkeypatch.setattr(cli, "analytic_outage", boom)
    cfg = write(tmp_path, scenario_text())
    assert main(["outage", "--scenario", str(cfg), "--method", "exact",
                 "--out", str(tmp_path)]) == EXIT_DIAG


def test_validate_single_hop_passes(tmp_path):
    cfg = write(tmp_path, scenario_text())
    rc = main(["validate", "--scenario", str(cfg), "--samples", "50000", "--seed", "1",
               "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "validate.json").read_text(encoding="utf-8"))
    assert rc == 0 and rep["pass"]
    assert rep["ks_statistic"] < rep["ks_critical_1pct"]


def test_diversity_and_pdf_dump(tmp_path):
    cfg = write(tmp_path, scenario_text())
    assert main(["diversity", "--scenario", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "diversity.json").read_text(encoding="utf-8"))
    assert math.isfinite(rep["fitted_slope"]) and rep["formula"] == pytest.approx(2.0)
    assert main(["pdf-dump", "--scenario", str(cfg), "--samples", "20000", "--ptx", "10",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "pdf.csv").read_text(encoding="utf-8").splitlines()
    assert "gamma,value,std_error,method" in lines


def test_plot_script_renders_default_scenario(tmp_path):
    pytest.importorskip("matplotlib")
    sc = load_scenario(default_scenario_path())
    pts = run_sweep(sc, "outage", ("exact",))
    f = emit_csv(pts, tmp_path / "outage_exact.csv")
    script = emit_plot_script(pts, tmp_path / "plot_outage.py", [f.name])
    res = subprocess.run([sys.executable, str(script)], capture_output=True, text=True,
                         env={"MPLBACKEND": "Agg", "PATH": ""}, timeout=120)
    assert res.returncode == 0, res.stderr
    assert list(tmp_path.glob("*.png"))
