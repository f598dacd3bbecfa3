# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled slot loops; bit-identical to ``_pykernels`` on the same inputs."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, int8_t

cnp.import_array()

DEF FCFS = 0
DEF FCFS_VACATION = 1
DEF LCFS = 2
DEF GG_INF = 3

DEF EV_ARRIVAL = 1
DEF EV_START = 2
DEF EV_FRESH = 4
DEF EV_STALE = 8
DEF EV_PREEMPT = 16
DEF EV_VACATION = 32

DEF OUT_FRESH = 1
DEF OUT_STALE = 2
DEF OUT_PREEMPTED = 3


def run_kernel(int discipline, int64_t total_slots,
               const int64_t[::1] arrivals, const int64_t[::1] stamps,
               const int64_t[::1] services, const int64_t[::1] vacations):
    cdef Py_ssize_t n = arrivals.shape[0]
    ages_a = np.zeros(total_slots + 1, dtype=np.int64)
    slot_a = np.full(total_slots, -1, dtype=np.int64)
    flags_a = np.zeros(total_slots, dtype=np.int8)
    start_a = np.full(n, -1, dtype=np.int64)
    end_a = np.full(n, -1, dtype=np.int64)
    out_a = np.zeros(n, dtype=np.int8)
    cdef int64_t[::1] ages = ages_a
    cdef int64_t[::1] slot_pkt = slot_a
    cdef int8_t[::1] flags = flags_a
    cdef int64_t[::1] start = start_a
    cdef int64_t[::1] end = end_a
    cdef int8_t[::1] outcome = out_a
    cdef int status = 0
    cdef int64_t[::1] best
    if discipline == FCFS or discipline == FCFS_VACATION:
        with nogil:
            status = _fcfs(total_slots, arrivals, stamps, services, vacations,
                           discipline == FCFS_VACATION, ages, slot_pkt, flags, start, end, outcome)
        if status:
            raise RuntimeError("vacation draws exhausted")
    elif discipline == LCFS:
        with nogil:
            _lcfs(total_slots, arrivals, stamps, services, ages, slot_pkt, flags, start, end, outcome)
    elif discipline == GG_INF:
        best = np.full(total_slots, -1, dtype=np.int64)
        with nogil:
            _gginf(total_slots, arrivals, stamps, services, best, ages, slot_pkt, flags,
                   start, end, outcome)
    else:
        raise ValueError(f"unknown discipline code {discipline}")
    return ages_a, slot_a, flags_a, start_a, end_a, out_a


cdef int _fcfs(int64_t T, const int64_t[::1] arr, const int64_t[::1] stm,
               const int64_t[::1] svc, const int64_t[::1] vac, bint use_vac,
               int64_t[::1] ages, int64_t[::1] slot_pkt, int8_t[::1] flags,
               int64_t[::1] start, int64_t[::1] end, int8_t[::1] outcome) noexcept nogil:
    cdef Py_ssize_t n = arr.shape[0], nv = vac.shape[0]
    cdef int64_t A = 0, t, d, end_t = -1, vac_end = 0, new_a
    cdef Py_ssize_t a = 0, h = 0, vi = 0
    cdef bint serving = False
    cdef int8_t fl
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
                if vi >= nv:
                    return 1
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
        ages[t + 1] = A
        flags[t] = fl
    return 0


cdef void _lcfs(int64_t T, const int64_t[::1] arr, const int64_t[::1] stm,
                const int64_t[::1] svc,
                int64_t[::1] ages, int64_t[::1] slot_pkt, int8_t[::1] flags,
                int64_t[::1] start, int64_t[::1] end, int8_t[::1] outcome) noexcept nogil:
    cdef Py_ssize_t n = arr.shape[0], a = 0, cur = -1
    cdef int64_t A = 0, t, d, end_t = -1, new_a
    cdef int8_t fl
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
        ages[t + 1] = A
        flags[t] = fl


cdef void _gginf(int64_t T, const int64_t[::1] arr, const int64_t[::1] stm,
                 const int64_t[::1] svc, int64_t[::1] best,
                 int64_t[::1] ages, int64_t[::1] slot_pkt, int8_t[::1] flags,
                 int64_t[::1] start, int64_t[::1] end, int8_t[::1] outcome) noexcept nogil:
    cdef Py_ssize_t n = arr.shape[0], j
    cdef int64_t A = 0, t, c, d, new_a
    for j in range(n):
        start[j] = arr[j]
        flags[arr[j]] |= EV_ARRIVAL | EV_START
        c = arr[j] + svc[j] - 1
        if c < T:
            best[c] = j
    for t in range(T):
        j = best[t]
        new_a = A + 1
        if j >= 0:
            slot_pkt[t] = j
            d = t - stm[j]
            if d < A:
                new_a = d + 1
                flags[t] |= EV_FRESH
            else:
                flags[t] |= EV_STALE
        A = new_a
        ages[t + 1] = A
    for j in range(n):
        c = arr[j] + svc[j] - 1
        if c < T:
            end[j] = c
            if best[c] == j and (flags[c] & EV_FRESH):
                outcome[j] = OUT_FRESH
            else:
                outcome[j] = OUT_STALE
