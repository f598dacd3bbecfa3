"""Probability mass functions on the positive integers.

Every random duration in the slotted model (service S, inter-generation X,
vacation V) takes at least one slot, so supports start at 1.  Geometric
laws keep closed-form moments and PGFs; their stored pmf is truncated where
the remaining tail drops below ``GEOMETRIC_TAIL``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError

GEOMETRIC_TAIL = 1e-12
RENORMALIZE_TOL = 1e-9

FAMILIES = ("deterministic", "geometric", "uniform", "explicit")


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """An immutable pmf on {1, 2, ...}.

    ``values`` is strictly increasing, ``probs`` matches it elementwise, and
    ``tail_mass`` is the probability beyond ``values[-1]`` that is not
    stored (nonzero only for truncated infinite-support laws).
    """

    values: np.ndarray
    probs: np.ndarray
    tail_mass: float = 0.0
    family: str = "explicit"
    params: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if values.ndim != 1 or values.shape != probs.shape or values.size == 0:
            raise ValueError("values and probs must be matching non-empty 1-d arrays")
        if values[0] < 1:
            raise ValueError("support must lie in {1, 2, ...}")
        if np.any(np.diff(values) <= 0):
            raise ValueError("support values must be strictly increasing")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if not 0 <= self.tail_mass <= 1:
            raise ValueError("tail_mass must lie in [0, 1]")
        if abs(probs.sum() + self.tail_mass - 1.0) > 1e-12:
            raise ValueError("probabilities plus tail mass must sum to 1")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def __repr__(self):
        if self.family == "explicit":
            return f"explicit(n={self.values.size}, mean={self.mean():.6g})"
        args = ", ".join(f"{k}={v!r}" for k, v in self.params)
        return f"{self.family}({args})"

    @property
    def param(self) -> dict:
        return dict(self.params)

    @property
    def is_geometric(self) -> bool:
        return self.family == "geometric" and self.param["p"] < 1.0

    @property
    def bounded(self) -> bool:
        return self.tail_mass == 0.0 and not self.is_geometric

    @property
    def max_value(self) -> int:
        """Largest stored support point."""
        return int(self.values[-1])

    @property
    def truncation_bound(self) -> float:
        """Bound on the error of stored-support sums of bounded functions."""
        return 0.0 if self.is_geometric else float(self.tail_mass)

    # -- moments and generating function ---------------------------------

    def mean(self) -> float:
        if self.is_geometric:
            return 1.0 / self.param["p"]
        return float(np.dot(self.values, self.probs))

    def second_moment(self) -> float:
        if self.is_geometric:
            p = self.param["p"]
            return (2.0 - p) / (p * p)
        v = self.values.astype(np.float64)
        return float(np.dot(v * v, self.probs))

    def variance(self) -> float:
        m = self.mean()
        return self.second_moment() - m * m

    def pgf(self, x: float) -> float:
        """E[x^D] for x in [0, 1]."""
        x = _unit_interval(x)
        if self.is_geometric:
            p = self.param["p"]
            return p * x / (1.0 - (1.0 - p) * x)
        return float(np.dot(self.probs, np.power(x, self.values.astype(np.float64))))

    def pgf_derivative(self, x: float) -> float:
        """E[D x^(D-1)] for x in [0, 1]."""
        x = _unit_interval(x)
        if self.is_geometric:
            p = self.param["p"]
            q = 1.0 - (1.0 - p) * x
            return p / (q * q)
        v = self.values.astype(np.float64)
        return float(np.dot(self.probs * v, np.power(x, v - 1.0)))

    # -- pointwise access --------------------------------------------------

    @cached_property
    def _suffix(self) -> np.ndarray:
        # _suffix[i] = P(D >= values[i]); trailing entry is the unstored tail
        s = np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]]) + self.tail_mass
        return np.minimum(s, 1.0)

    @cached_property
    def _cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def pmf(self, k):
        """P(D = k), vectorized; closed form beyond the stored support for geometric."""
        k = np.asarray(k, dtype=np.int64)
        if self.is_geometric:
            p = self.param["p"]
            out = np.where(k >= 1, p * np.power(1.0 - p, np.maximum(k, 1) - 1.0), 0.0)
        else:
            idx = np.searchsorted(self.values, k)
            idx_c = np.minimum(idx, self.values.size - 1)
            out = np.where(self.values[idx_c] == k, self.probs[idx_c], 0.0)
        return out if out.ndim else float(out)

    def sf(self, k):
        """P(D > k), vectorized."""
        k = np.asarray(k, dtype=np.int64)
        if self.is_geometric:
            p = self.param["p"]
            out = np.where(k >= 0, np.power(1.0 - p, np.maximum(k, 0).astype(np.float64)), 1.0)
        else:
            out = self._suffix[np.searchsorted(self.values, k, side="right")]
        return out if out.ndim else float(out)

    def tail_first_moment(self, k: int) -> float:
        """sum_{j > k} j P(D = j), exact for geometric, stored-support otherwise."""
        if self.is_geometric:
            p = self.param["p"]
            q = 1.0 - p
            # sum_{j>k} j p q^(j-1) = q^k (k + 1/p)
            return q**k * (k + 1.0 / p)
        mask = self.values > k
        return float(np.dot(self.values[mask], self.probs[mask]))

    def support_upto(self, tol: float) -> int:
        """Smallest K such that the mass and first moment beyond K are both below tol."""
        if not self.is_geometric:
            return self.max_value
        p = self.param["p"]
        k = max(1, int(math.ceil(math.log(tol) / math.log1p(-p))))
        while self.tail_first_moment(k) >= tol:
            k += max(1, k // 8)
        return k

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform draws; geometric inverts its closed-form CDF."""
        u = rng.random(size)
        if self.family == "geometric":
            p = self.param["p"]
            if p == 1.0:
                out = np.ones_like(u, dtype=np.int64)
            else:
                out = np.ceil(np.log1p(-u) / math.log1p(-p)).astype(np.int64)
                out = np.maximum(out, 1)
        elif self.values.size == 1:
            out = np.full(np.shape(u), self.values[0], dtype=np.int64)
        else:
            idx = np.searchsorted(self._cdf, u, side="right")
            out = self.values[np.minimum(idx, self.values.size - 1)]
        if size is None:
            return int(out)
        return out


def _unit_interval(x):
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"PGF argument must lie in [0, 1], got {x}")
    return x


def make_geometric(p: float) -> DiscreteDist:
    """Waiting time to the first success of Bernoulli(p) trials, k >= 1."""
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"geometric parameter must lie in (0, 1], got {p}")
    if p == 1.0:
        return DiscreteDist(np.array([1]), np.array([1.0]), 0.0, "geometric", (("p", 1.0),))
    q = 1.0 - p
    K = max(1, int(math.ceil(math.log(GEOMETRIC_TAIL) / math.log(q))))
    while q**K >= GEOMETRIC_TAIL:
        K += 1
    k = np.arange(1, K + 1)
    probs = p * np.power(q, k - 1.0)
    tail = q**K
    # absorb float drift so the stored pmf and closed-form tail stay consistent
    probs[-1] += (1.0 - tail) - probs.sum()
    return DiscreteDist(k, probs, tail, "geometric", (("p", p),))


def make_deterministic(d: int) -> DiscreteDist:
    d = _positive_int(d, "deterministic value")
    return DiscreteDist(np.array([d]), np.array([1.0]), 0.0, "deterministic", (("d", d),))


def make_uniform(a: int, b: int) -> DiscreteDist:
    """Equal mass on {a, ..., b}."""
    a = _positive_int(a, "uniform lower bound")
    b = _positive_int(b, "uniform upper bound")
    if a > b:
        raise ValueError(f"uniform bounds need a <= b, got a={a}, b={b}")
    n = b - a + 1
    return DiscreteDist(np.arange(a, b + 1), np.full(n, 1.0 / n), 0.0, "uniform", (("a", a), ("b", b)))


def make_explicit(pairs: Iterable | Mapping) -> DiscreteDist:
    """Build from (value, probability) pairs.

    Totals within 1e-9 of one are renormalized; anything further off is
    treated as a typo and rejected.
    """
    items = list(pairs.items()) if isinstance(pairs, Mapping) else [tuple(p) for p in pairs]
    if not items:
        raise ValueError("explicit pmf needs at least one (value, probability) pair")
    table = {}
    for item in items:
        if len(item) != 2:
            raise ValueError(f"expected (value, probability) pair, got {item!r}")
        v = _positive_int(item[0], "pmf value")
        pr = float(item[1])
        if not 0.0 <= pr <= 1.0 or math.isnan(pr):
            raise ValueError(f"probability for value {v} must lie in [0, 1], got {pr}")
        if v in table:
            raise ValueError(f"duplicate pmf value {v}")
        table[v] = pr
    total = math.fsum(table.values())
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise ValueError(f"pmf probabilities sum to {total!r}, not 1")
    values = np.array(sorted(v for v, pr in table.items() if pr > 0), dtype=np.int64)
    if values.size == 0:
        raise ValueError("pmf has no positive-probability values")
    probs = np.array([table[v] for v in values]) / total
    probs[-1] = max(0.0, 1.0 - math.fsum(probs[:-1]))
    return DiscreteDist(values, probs, 0.0, "explicit", ())


def _positive_int(x, what) -> int:
    if isinstance(x, bool) or not float(x).is_integer():
        raise ValueError(f"{what} must be an integer, got {x!r}")
    x = int(x)
    if x < 1:
        raise ValueError(f"{what} must be >= 1 (every event takes a slot), got {x}")
    return x


def from_config(node: Mapping, where: str = "") -> DiscreteDist:
    """Parse a distribution block from an experiment file.

    Accepted forms::

        {family: geometric, p: 0.75}      {family: geometric, mean: 4}
        {family: deterministic, value: 3} {family: deterministic, mean: 3}
        {family: uniform, low: 1, high: 3}
        {family: uniform, mean: 4}        # realized as uniform(1, 2*mean - 1)
        {family: explicit, pmf: [[1, 0.5], [2, 0.5]]}
    """
    line = getattr(node, "line", None)
    if not isinstance(node, Mapping):
        raise ConfigError("distribution must be a mapping", line, where)
    family = node.get("family")
    try:
        if family == "geometric":
            if "p" in node:
                return make_geometric(node["p"])
            return make_geometric(1.0 / float(_required(node, "mean")))
        if family == "deterministic":
            return make_deterministic(node["value"] if "value" in node else _required(node, "mean"))
        if family == "uniform":
            if "mean" in node:
                m = float(node["mean"])
                if not m.is_integer():
                    raise ValueError(f"uniform mean must be an integer, got {m}")
                return make_uniform(1, 2 * int(m) - 1)
            return make_uniform(_required(node, "low"), _required(node, "high"))
        if family == "explicit":
            return make_explicit(_required(node, "pmf"))
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        msg = exc.args[0] if exc.args else str(exc)
        raise ConfigError(str(msg), line, where) from None
    raise ConfigError(f"unknown distribution family {family!r}; expected one of {FAMILIES}", line, where)


def _required(node, key):
    if key not in node:
        raise KeyError(f"missing key {key!r}")
    return node[key]
