"""Age of information for discrete-time queues.

``aoiq.dist`` holds slot-valued distributions, ``aoiq.analytic`` the closed
forms, ``aoiq.sim`` the slotted simulator and ``aoiq.harness`` the
experiment runner behind the ``aoiq`` command.
"""
from .analytic import AnalyticResult, QueueSpec, analyze
from .dist import DiscreteDist, make_deterministic, make_explicit, make_geometric, make_uniform
from .sim import AgeEstimate, SimConfig, run_simulation

__version__ = "0.1.0"

__all__ = [
    "AgeEstimate",
    "AnalyticResult",
    "DiscreteDist",
    "QueueSpec",
    "SimConfig",
    "analyze",
    "make_deterministic",
    "make_explicit",
    "make_geometric",
    "make_uniform",
    "run_simulation",
]
