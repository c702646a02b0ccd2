"""Uplink outage slopes of a backhaul hop plus shadowed access against the formula."""

import math

import numpy as np

from thzrelay.analytic import (Direction, MixedConfig, MultihopConfig, uplink_diversity,
                               uplink_diversity_exact, uplink_outage)
from thzrelay.channel import AccessLink, ThzHop
from thzrelay.cli import fit_slope

S_CAP = 0.054
CONFIGS = {
    "alpha=1.5 mu=1 sigma=5dB": (ThzHop(1.5, 1.0, 37.0, S_CAP), AccessLink(1.0, 5.0, 14.5, S_CAP)),
    "alpha=2 mu=2 sigma=8dB": (ThzHop(2.0, 2.0, 37.0, S_CAP), AccessLink(1.0, 8.0, 14.5, S_CAP)),
    "alpha=2 mu=2 phi_A=2.3": (ThzHop(2.0, 2.0, 37.0, S_CAP), AccessLink(1.0, 2.0, 2.3, S_CAP)),
}


def config(hop, access, mean):
    g0_a = mean / math.exp(access.log_moment(access.snr_scale(1.0), 1.0).real)
    bh = MultihopConfig((hop,), (mean / hop.moment(1.0, 1.0),))
    return MixedConfig(bh, access, g0_a, Direction.UPLINK)


def main():
    db = np.arange(40.0, 60.0 + 1e-9, 2.0)
    for name, (hop, access) in CONFIGS.items():
        out = [float(uplink_outage(config(hop, access, 10 ** (x / 10)), 1.0)) for x in db]
        cfg = config(hop, access, 1e6)
        print(f"{name:26s} fitted {fit_slope(db, out):.3f}  formula {uplink_diversity(cfg):.3f}"
              f"  exact {uplink_diversity_exact(cfg):.3f}")


if __name__ == "__main__":
    main()
