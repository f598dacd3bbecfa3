"""Compiled vs pure-Python slot loops on identical pre-drawn inputs.

    python3 benchmarks/bench_kernels.py [--slots N] [--repeat R]
"""
import argparse
import time

import numpy as np

from aoiq.analytic import FCFS, FCFS_VACATION, GG_INF, LCFS, QueueSpec
from aoiq.dist import make_geometric, make_uniform
from aoiq.sim import KERNELS, draw_inputs, simulate_from_draws

SPECS = {
    FCFS: QueueSpec(FCFS, make_geometric(0.75), arrival_rate=0.3),
    FCFS_VACATION: QueueSpec(FCFS_VACATION, make_geometric(0.75), arrival_rate=0.3, vacation=make_uniform(1, 7)),
    LCFS: QueueSpec(LCFS, make_geometric(0.5), interarrival=make_geometric(0.5)),
    GG_INF: QueueSpec(GG_INF, make_geometric(0.5), interarrival=make_geometric(0.5)),
}


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = sorted(KERNELS)
    print(f"{args.slots} slots, best of {args.repeat}; backends: {', '.join(backends)}")
    print(f"{'discipline':<24}" + "".join(f"{b + ' Mslot/s':>18}" for b in backends) + f"{'speedup':>10}")
    for disc, spec in SPECS.items():
        arr, svc, vac = draw_inputs(spec, args.slots, seed=0)
        rates, traces = {}, {}
        for b in backends:
            secs, traces[b] = best_time(
                lambda b=b: simulate_from_draws(disc, args.slots, arr, svc, vac, backend=b), args.repeat
            )
            rates[b] = args.slots / secs / 1e6
        if len(traces) == 2:
            assert np.array_equal(traces["cython"].ages, traces["python"].ages), "backends disagree"
        speedup = rates["cython"] / rates["python"] if len(rates) == 2 else float("nan")
        print(f"{disc:<24}" + "".join(f"{rates[b]:>18.2f}" for b in backends) + f"{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
