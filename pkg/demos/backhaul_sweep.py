"""Outage and BER of the shipped two-hop backhaul with asymptote and a quick Monte Carlo."""

from thzrelay.cli import run_sweep
from thzrelay.scenario import default_scenario_path, load_scenario


def main():
    sc = load_scenario(default_scenario_path())
    out = run_sweep(sc, "outage", ("exact", "asymptotic", "mc"), samples=200_000)
    ber = {p.ptx_dbm: p.value for p in run_sweep(sc, "ber", ("exact",))}
    rows = {}
    for p in out:
        rows.setdefault(p.ptx_dbm, {})[p.method] = p.value
    print(f"{'ptx dBm':>8} {'outage':>11} {'asymptote':>11} {'mc':>11} {'ber':>11}")
    for ptx, r in sorted(rows.items()):
        print(f"{ptx:8.1f} {r['exact']:11.4e} {r['asymptotic']:11.4e} {r['mc']:11.4e} "
              f"{ber[ptx]:11.4e}")


if __name__ == "__main__":
    main()
