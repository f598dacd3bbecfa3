"""Trace-level identities, each returning a violation count.

The checks recompute what they can from the packet table and the raw draws
rather than trusting the per-slot arrays the kernel wrote.
"""
from __future__ import annotations

import numpy as np

from ..analytic import FCFS, FCFS_VACATION, GG_INF, LCFS
from ._pykernels import OUT_FRESH
from .trace import SimTrace

DROP_WINDOW = 50


def age_recursion(tr: SimTrace) -> int:
    """A(t+1) = A(t) + 1 without delivery, min(t - Y, A(t)) + 1 with one.

    Deliveries are taken from the packet table (end slot of every delivered
    packet); several in one slot act through their freshest stamp.
    """
    T = tr.total_slots
    ages = tr.ages
    freshest = np.full(T, np.iinfo(np.int64).min, dtype=np.int64)
    d = tr.delivered
    np.maximum.at(freshest, tr.end[d], tr.generated[d])
    t = np.arange(T)
    has = freshest > np.iinfo(np.int64).min
    expected = ages[:-1] + 1
    expected[has] = np.minimum(t[has] - freshest[has], ages[:-1][has]) + 1
    bad = int(np.count_nonzero(expected != ages[1:]))
    bad += int(ages[0] != 0)
    # delivered packets: served for exactly their drawn service, after arriving
    bad += int(np.count_nonzero(tr.end[d] - tr.start[d] + 1 != tr.service[d]))
    bad += int(np.count_nonzero(tr.start[d] < tr.arrival[d]))
    bad += int(np.count_nonzero(tr.arrival < tr.generated))
    return bad


def fcfs_freshness(tr: SimTrace) -> int:
    """Deliveries leave in generation order and the min never binds.

    Freshness is required of every packet stamped strictly later than all
    earlier deliveries, the initial state A(0) = 0 counting as a delivery
    stamped 0.  Ties only arise from batch arrivals in hand-built draws.
    """
    d = np.flatnonzero(tr.delivered)
    order = d[np.argsort(tr.end[d], kind="stable")]
    bad = int(np.count_nonzero(np.diff(tr.generated[order]) < 0))
    y = tr.generated[order]
    prev = np.maximum.accumulate(np.concatenate([[0], y[:-1]]))
    order = order[y > prev]
    t = tr.end[order]
    bad += int(np.count_nonzero(t - tr.generated[order] >= tr.ages[t]))
    return bad


def _renewals(tr: SimTrace):
    z = tr.generated
    T = tr.total_slots
    keep = np.flatnonzero(z[1:] <= T)  # renewal i is complete when Z_{i+1} <= T
    x = z[1:] - z[:-1]
    return z, keep, x


def lcfs_b_recursion(tr: SimTrace) -> int:
    """B_{i+1} = X_i + B_i (1 - 1{S_i <= X_i}) with B_i = A(Z_i)."""
    z, keep, x = _renewals(tr)
    b = tr.ages[z[: keep.size + 1]]
    s = tr.service[keep]
    xi = x[keep]
    expected = xi + b[:-1] * (s > xi)
    return int(np.count_nonzero(expected != b[1:]))


def lcfs_renewal_area(tr: SimTrace) -> int:
    """Area over [Z_i, Z_i + X_i) equals (X_i^2 - X_i)/2 + B_i min(X_i, S_i)."""
    z, keep, x = _renewals(tr)
    cum = np.concatenate([[0], np.cumsum(tr.ages)])
    zi, xi = z[keep], x[keep]
    area = cum[zi + xi] - cum[zi]
    b = tr.ages[zi]
    expected = (xi * xi - xi) // 2 + b * np.minimum(xi, tr.service[keep])
    return int(np.count_nonzero(area != expected))


def gginf_drop_identity(tr: SimTrace, window: int = DROP_WINDOW) -> int:
    """The first age drop caused by packet i or a later one happens at Z_i + D_i.

    D_i = min_{0<=l<=window} (Z_{i+l} - Z_i + S_{i+l}) from the raw draws; a
    packet is checked only when that window provably contains the minimum
    and the drop falls inside the run.
    """
    z, s = tr.generated, tr.service
    n = z.size - window
    if n <= 1:
        return 0
    # packet 0 shares its stamp with the initial state A(0) = 0 and cannot lower the age
    idx = np.arange(1, n)
    dmin = s[idx].copy()
    for l in range(1, window + 1):
        np.minimum(dmin, z[idx + l] - z[idx] + s[idx + l], out=dmin)
    # Z_{i+l} - Z_i >= l, so any l > window cannot beat dmin <= window + 1
    ok = (dmin <= window + 1) & (z[idx] + dmin <= tr.total_slots)
    fresh = np.flatnonzero(tr.outcome == OUT_FRESH)
    # earliest fresh completion among packets with id >= fresh[k]
    first_end = np.minimum.accumulate(tr.end[fresh][::-1])[::-1]
    k = np.searchsorted(fresh, idx[ok])
    observed = np.full(k.size, -1, dtype=np.int64)
    found = k < fresh.size
    observed[found] = first_end[k[found]] + 1
    return int(np.count_nonzero(observed != z[idx[ok]] + dmin[ok]))


CHECKS = {
    FCFS: (age_recursion, fcfs_freshness),
    FCFS_VACATION: (age_recursion, fcfs_freshness),
    LCFS: (age_recursion, lcfs_b_recursion, lcfs_renewal_area),
    GG_INF: (age_recursion, gginf_drop_identity),
}


def check_trace(tr: SimTrace) -> dict[str, int]:
    """Run every identity that applies to the trace's discipline."""
    checks = list(CHECKS[tr.discipline])
    if tr.generation_lag != 0:
        # the renewal identities are stated for packets served from their generation slot
        checks = [c for c in checks if c not in (lcfs_b_recursion, lcfs_renewal_area, gginf_drop_identity)]
    return {c.__name__: c(tr) for c in checks}
