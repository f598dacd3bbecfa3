"""Slotted-time simulation of the four disciplines.

Slot conventions
----------------
A(t) is the age at the start of slot t, with A(0) = 0.  Packets enter the
system at the start of a slot and finish service at the end of one; a
packet that finishes in slot t gives A(t+1) = min(t - Y, A(t)) + 1, where Y
is its generation stamp.

``generation_lag`` is the number of slots between a packet's generation
stamp and the slot it enters the system.  The FCFS closed forms count the
generation slot as already elapsed (lag 1); the LCFS and G/G/inf closed
forms hand a packet to the server in its generation slot (lag 0).  These
are the defaults.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..analytic import FCFS, FCFS_VACATION, GG_INF, LCFS, QueueSpec
from ..errors import NoDeliveriesError
from . import _pykernels as K
from ._backend import get_kernel
from .trace import SimTrace

DISCIPLINE_CODES = {FCFS: K.FCFS, FCFS_VACATION: K.FCFS_VACATION, LCFS: K.LCFS, GG_INF: K.GG_INF}
DEFAULT_LAG = {FCFS: 1, FCFS_VACATION: 1, LCFS: 0, GG_INF: 0}
MIN_ESTIMATE_SLOTS = 1_000
N_BATCHES = 30


@dataclass(frozen=True)
class SimConfig:
    spec: QueueSpec
    total_slots: int = 1_000_000
    warmup_slots: int = 10_000
    seed: int = 0
    trace_enabled: bool = False
    generation_lag: Optional[int] = None

    def __post_init__(self):
        if not self.total_slots > self.warmup_slots >= 0:
            raise ValueError("need total_slots > warmup_slots >= 0")
        if self.generation_lag is not None and self.generation_lag < 0:
            raise ValueError("generation_lag must be >= 0")

    @property
    def lag(self) -> int:
        if self.generation_lag is None:
            return DEFAULT_LAG[self.spec.discipline]
        return self.generation_lag


@dataclass(frozen=True)
class AgeEstimate:
    avg_age: float
    peak_age: float
    delivery_count: int
    slots_measured: int
    avg_stderr: float
    peak_stderr: float
    trace: Optional[SimTrace] = field(default=None, repr=False, compare=False)


def draw_inputs(spec: QueueSpec, total_slots: int, seed: int):
    """Pre-draw (arrival slots, service draws, vacation draws) for a run.

    Arrivals, services and vacations come from independent child streams of
    ``seed``, so changing e.g. the vacation law leaves arrivals untouched.
    """
    arr_ss, svc_ss, vac_ss = np.random.SeedSequence(int(seed)).spawn(3)
    arr_rng = np.random.default_rng(arr_ss)
    T = int(total_slots)
    if spec.is_fcfs:
        coins = arr_rng.random(T) < spec.arrival_rate
        coins[0] = False  # slot 0 belongs to the initial fresh state A(0) = 0
        arrivals = np.flatnonzero(coins).astype(np.int64)
    else:
        X = spec.interarrival_dist
        chunk = int(T / X.mean() * 1.05) + 64
        parts = [np.zeros(1, dtype=np.int64)]
        last = 0
        while last < T:
            z = last + np.cumsum(X.sample(arr_rng, chunk))
            parts.append(z)
            last = int(z[-1])
        z = np.concatenate(parts)
        arrivals = z[z < T]
    services = spec.service.sample(np.random.default_rng(svc_ss), arrivals.size)
    if spec.vacation is not None:
        vacations = spec.vacation.sample(np.random.default_rng(vac_ss), T)
    else:
        vacations = np.zeros(0, dtype=np.int64)
    return arrivals, np.asarray(services, dtype=np.int64), np.asarray(vacations, dtype=np.int64)


def simulate_from_draws(discipline, total_slots, arrivals, services, vacations=None, generation_lag=None, backend=None):
    """Run a kernel on explicit draws; useful for hand-built scenarios."""
    lag = DEFAULT_LAG[discipline] if generation_lag is None else int(generation_lag)
    arrivals = np.ascontiguousarray(arrivals, dtype=np.int64)
    services = np.ascontiguousarray(services, dtype=np.int64)
    vacations = np.ascontiguousarray([] if vacations is None else vacations, dtype=np.int64)
    T = int(total_slots)
    if arrivals.size and (arrivals[0] < 0 or arrivals[-1] >= T or np.any(np.diff(arrivals) < 0)):
        raise ValueError("arrival slots must be sorted and inside [0, total_slots)")
    if discipline != FCFS and discipline != FCFS_VACATION and np.any(np.diff(arrivals) == 0):
        raise ValueError("renewal arrivals need distinct slots")
    if services.size != arrivals.size or np.any(services < 1):
        raise ValueError("need one service draw >= 1 per arrival")
    stamps = arrivals - lag
    kernel = get_kernel(backend)
    ages, slot_pkt, flags, start, end, outcome = kernel(
        DISCIPLINE_CODES[discipline], T, arrivals, stamps, services, vacations
    )
    return SimTrace(discipline, lag, ages, slot_pkt, flags, arrivals, stamps, services, start, end, outcome)


def simulate_trace(cfg: SimConfig, backend=None) -> SimTrace:
    """Full per-slot trace for ``cfg``; no estimation, no size floor."""
    if cfg.spec.is_fcfs:
        cfg.spec.check_stable()
    arrivals, services, vacations = draw_inputs(cfg.spec, cfg.total_slots, cfg.seed)
    return simulate_from_draws(
        cfg.spec.discipline, cfg.total_slots, arrivals, services, vacations, cfg.lag, backend
    )


def run_simulation(cfg: SimConfig, backend=None) -> AgeEstimate:
    """Simulate and estimate peak/average age after warmup.

    The trace is attached to the estimate when ``cfg.trace_enabled``.
    """
    if cfg.total_slots < MIN_ESTIMATE_SLOTS:
        raise ValueError(f"estimates need total_slots >= {MIN_ESTIMATE_SLOTS}")
    trace = simulate_trace(cfg, backend)
    est = estimate_from_trace(trace.ages, cfg.warmup_slots)
    if cfg.trace_enabled:
        est = replace(est, trace=trace)
    return est


def estimate_from_trace(ages, warmup: int = 0, batches: int = N_BATCHES) -> AgeEstimate:
    """Peak and average age over slots ``warmup .. len(ages) - 2``.

    A slot t is a peak slot when A(t+1) <= A(t).  Standard errors come from
    non-overlapping batch means; the peak uses a ratio estimator since the
    number of peaks per batch varies.
    """
    ages = np.asarray(ages)
    if ages.size < warmup + 2:
        raise ValueError("need at least warmup + 2 ages")
    a = ages[warmup:-1].astype(np.float64)
    peak_mask = ages[warmup + 1:] <= ages[warmup:-1]
    n_peaks = int(peak_mask.sum())
    if n_peaks == 0:
        raise NoDeliveriesError("no useful deliveries after warmup")
    avg = float(a.mean())
    peak = float(a[peak_mask].mean())

    B = min(batches, a.size)
    avg_se = peak_se = math.nan
    if B >= 2:
        edges = np.linspace(0, a.size, B + 1).astype(np.int64)
        sums = np.add.reduceat(a, edges[:-1])
        lengths = np.diff(edges)
        bmeans = sums / lengths
        avg_se = float(np.std(bmeans, ddof=1) / math.sqrt(B))
        psums = np.add.reduceat(np.where(peak_mask, a, 0.0), edges[:-1])
        pcounts = np.add.reduceat(peak_mask.astype(np.float64), edges[:-1])
        resid = psums - peak * pcounts
        peak_se = float(math.sqrt(np.sum(resid**2) / (B * (B - 1))) / pcounts.mean())
    return AgeEstimate(avg, peak, n_peaks, int(a.size), avg_se, peak_se)
