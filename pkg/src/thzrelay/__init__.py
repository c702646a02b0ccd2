"""Terahertz multihop backhaul and mixed access links: channel models,
Mellin-Barnes evaluation of Fox H-functions, closed-form performance and a
Monte Carlo oracle."""

from . import analytic, channel, montecarlo, specfun
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
__all__ = ["analytic", "channel", "montecarlo", "specfun", "Scenario", "load_scenario"]
