"""Packet-level congestion control laboratory."""

from .engine import RngStream, Simulator
from .metrics import SweepPoint, fairness_index, is_congested, knee_cliff, power, summarize
from .scenario import Scenario, ScenarioError, run_sweep, simulate
from .builtins import builtin_scenarios, get_builtin

__version__ = "0.1.0"
