"""Pure-Python slot loops; the reference the compiled kernel must match exactly.

All randomness is drawn before the loop, so a kernel is a deterministic map
from (arrival slots, generation stamps, service draws, vacation draws) to the
age process and per-packet bookkeeping.
"""
import numpy as np

FCFS, FCFS_VACATION, LCFS, GG_INF = 0, 1, 2, 3

# per-slot event bits
EV_ARRIVAL = 1
EV_START = 2
EV_FRESH = 4
EV_STALE = 8
EV_PREEMPT = 16
EV_VACATION = 32

# per-packet outcomes
OUT_IN_FLIGHT = 0
OUT_FRESH = 1
OUT_STALE = 2
OUT_PREEMPTED = 3


def _alloc(total_slots, n):
    ages = np.zeros(total_slots + 1, dtype=np.int64)
    slot_pkt = np.full(total_slots, -1, dtype=np.int64)
    flags = np.zeros(total_slots, dtype=np.int8)
    start = np.full(n, -1, dtype=np.int64)
    end = np.full(n, -1, dtype=np.int64)
    outcome = np.zeros(n, dtype=np.int8)
    return ages, slot_pkt, flags, start, end, outcome


def run_kernel(discipline, total_slots, arrivals, stamps, services, vacations):
    """Simulate ``total_slots`` slots; returns (ages, slot_pkt, flags, start, end, outcome).

    ``ages[t]`` is A(t) at the start of slot t, for t = 0..total_slots.
    """
    n = len(arrivals)
    out = _alloc(total_slots, n)
    T = int(total_slots)
    arr = arrivals.tolist()
    stm = stamps.tolist()
    svc = services.tolist()
    if discipline in (FCFS, FCFS_VACATION):
        _fcfs(T, arr, stm, svc, vacations.tolist(), discipline == FCFS_VACATION, *out)
    elif discipline == LCFS:
        _lcfs(T, arr, stm, svc, *out)
    elif discipline == GG_INF:
        _gginf(T, arr, stm, svc, *out)
    else:
        raise ValueError(f"unknown discipline code {discipline}")
    return out


def _fcfs(T, arr, stm, svc, vac, use_vac, ages, slot_pkt, flags, start, end, outcome):
    n = len(arr)
    A = 0
    a = 0  # packets that have arrived
    h = 0  # head of line
    vi = 0
    serving = False
    end_t = -1
    vac_end = 0  # server unavailable for t < vac_end
    age_out = [0] * (T + 1)
    fl_out = [0] * T
    for t in range(T):
        fl = 0
        while a < n and arr[a] == t:
            a += 1
            fl |= EV_ARRIVAL
        if not serving and t >= vac_end:
            if h < a:
                start[h] = t
                end_t = t + svc[h] - 1
                serving = True
                fl |= EV_START
            elif use_vac:
                if vi >= len(vac):
                    raise RuntimeError("vacation draws exhausted")
                vac_end = t + vac[vi]
                vi += 1
                fl |= EV_VACATION
        new_a = A + 1
        if serving and end_t == t:
            d = t - stm[h]
            end[h] = t
            slot_pkt[t] = h
            if d < A:
                new_a = d + 1
                outcome[h] = OUT_FRESH
                fl |= EV_FRESH
            else:
                outcome[h] = OUT_STALE
                fl |= EV_STALE
            h += 1
            serving = False
        A = new_a
        age_out[t + 1] = A
        fl_out[t] = fl
    ages[:] = age_out
    flags[:] = fl_out


def _lcfs(T, arr, stm, svc, ages, slot_pkt, flags, start, end, outcome):
    n = len(arr)
    A = 0
    a = 0
    cur = -1
    end_t = -1
    age_out = [0] * (T + 1)
    fl_out = [0] * T
    for t in range(T):
        fl = 0
        if a < n and arr[a] == t:
            fl |= EV_ARRIVAL | EV_START
            if cur >= 0:
                outcome[cur] = OUT_PREEMPTED
                end[cur] = t - 1
                fl |= EV_PREEMPT
            cur = a
            start[a] = t
            end_t = t + svc[a] - 1
            a += 1
        new_a = A + 1
        if cur >= 0 and end_t == t:
            d = t - stm[cur]
            end[cur] = t
            slot_pkt[t] = cur
            if d < A:
                new_a = d + 1
                outcome[cur] = OUT_FRESH
                fl |= EV_FRESH
            else:
                outcome[cur] = OUT_STALE
                fl |= EV_STALE
            cur = -1
        A = new_a
        age_out[t + 1] = A
        fl_out[t] = fl
    ages[:] = age_out
    flags[:] = fl_out


def _gginf(T, arr, stm, svc, ages, slot_pkt, flags, start, end, outcome):
    n = len(arr)
    # freshest packet completing in each slot; ids rise with generation time
    best = [-1] * T
    fl_out = [0] * T
    for j in range(n):
        t0 = arr[j]
        start[j] = t0
        fl_out[t0] |= EV_ARRIVAL | EV_START
        c = t0 + svc[j] - 1
        if c < T:
            best[c] = j
    A = 0
    age_out = [0] * (T + 1)
    for t in range(T):
        j = best[t]
        new_a = A + 1
        if j >= 0:
            slot_pkt[t] = j
            d = t - stm[j]
            if d < A:
                new_a = d + 1
                fl_out[t] |= EV_FRESH
            else:
                fl_out[t] |= EV_STALE
        A = new_a
        age_out[t + 1] = A
    for j in range(n):
        c = arr[j] + svc[j] - 1
        if c < T:
            end[j] = c
            outcome[j] = OUT_FRESH if (best[c] == j and fl_out[c] & EV_FRESH) else OUT_STALE
    ages[:] = age_out
    flags[:] = fl_out
