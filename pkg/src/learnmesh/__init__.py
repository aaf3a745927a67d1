"""Deterministic simulator and protocol library for cooperative learning
over hybrid wireless networks: dependency-aware resource dissemination
through mobile ad-hoc partitions with cost-accounted backbone injection,
question-selection paradigms, quiz scoring, and evaluation-driven eviction.
"""

from .kernels import BACKEND
from .metrics import build_report, parse_trace
from .scenario import InvalidScenario, Scenario, load_scenario
from .world import RunResult, World, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "InvalidScenario",
    "RunResult",
    "Scenario",
    "World",
    "__version__",
    "build_report",
    "load_scenario",
    "parse_trace",
    "run",
]
