"""Exact slotted-time simulation with a compiled kernel and a pure-Python fallback."""
from ._backend import DEFAULT_BACKEND, KERNELS, get_kernel
from .core import (
    DEFAULT_LAG,
    AgeEstimate,
    SimConfig,
    draw_inputs,
    estimate_from_trace,
    run_simulation,
    simulate_from_draws,
    simulate_trace,
)
from .invariants import check_trace
from .trace import SimTrace

__all__ = [
    "AgeEstimate",
    "DEFAULT_BACKEND",
    "DEFAULT_LAG",
    "KERNELS",
    "SimConfig",
    "SimTrace",
    "check_trace",
    "draw_inputs",
    "estimate_from_trace",
    "get_kernel",
    "run_simulation",
    "simulate_from_draws",
    "simulate_trace",
]
