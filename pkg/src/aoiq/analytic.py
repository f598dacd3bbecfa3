"""Closed-form peak and average age for the four slotted disciplines.

The Bernoulli arrival probability is written ``lam`` throughout; some
derivations call the same quantity gamma.

All functions are pure; they take a :class:`QueueSpec` (or distributions)
and return an :class:`AnalyticResult`.  Stability violations raise instead
of returning ``inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .dist import DiscreteDist, make_geometric
from .errors import AllPreemptedError, ConvergenceError, StabilityError

FCFS = "fcfs_ber_g_1"
FCFS_VACATION = "fcfs_ber_g_1_vacation"
LCFS = "lcfs_gg1_preemptive"
GG_INF = "gg_infinity"
DISCIPLINES = (FCFS, FCFS_VACATION, LCFS, GG_INF)

CROSS_TRUNCATION = 1e-10
DROP_HORIZON_TAIL = 1e-10
DROP_HORIZON_CAP = 100_000
DROP_TOL = 1e-12
DROP_MAX_ITER = 10_000


@dataclass(frozen=True)
class QueueSpec:
    """Discipline plus arrival, service and (optional) vacation laws.

    FCFS disciplines take Bernoulli arrivals (``arrival_rate``).  LCFS and
    G/G/inf take either a rate (read as geometric inter-generation times)
    or an explicit ``interarrival`` law.
    """

    discipline: str
    service: DiscreteDist
    arrival_rate: Optional[float] = None
    interarrival: Optional[DiscreteDist] = None
    vacation: Optional[DiscreteDist] = None

    def __post_init__(self):
        if self.discipline not in DISCIPLINES:
            raise ValueError(f"unknown discipline {self.discipline!r}; expected one of {DISCIPLINES}")
        if (self.arrival_rate is None) == (self.interarrival is None):
            raise ValueError("give exactly one of arrival_rate or interarrival")
        if self.discipline in (FCFS, FCFS_VACATION) and self.arrival_rate is None:
            raise ValueError(f"{self.discipline} needs Bernoulli arrivals (arrival_rate)")
        if self.arrival_rate is not None:
            rate = float(self.arrival_rate)
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"arrival rate must lie in (0, 1], got {rate}")
            object.__setattr__(self, "arrival_rate", rate)
        if (self.discipline == FCFS_VACATION) != (self.vacation is not None):
            if self.vacation is None:
                raise ValueError("vacation discipline needs a vacation distribution")
            raise ValueError(f"{self.discipline} does not take a vacation distribution")

    @property
    def lam(self) -> float:
        """Packets per slot."""
        if self.arrival_rate is not None:
            return self.arrival_rate
        return 1.0 / self.interarrival.mean()

    @property
    def interarrival_dist(self) -> DiscreteDist:
        if self.interarrival is not None:
            return self.interarrival
        return make_geometric(self.arrival_rate)

    @property
    def mu(self) -> float:
        return 1.0 / self.service.mean()

    @property
    def rho(self) -> float:
        return self.lam * self.service.mean()

    @property
    def is_fcfs(self) -> bool:
        return self.discipline in (FCFS, FCFS_VACATION)

    def check_stable(self):
        if self.is_fcfs and not self.rho < 1.0:
            raise StabilityError(f"unstable queue: rho = lambda*E[S] = {self.rho:.6g} >= 1")


@dataclass(frozen=True)
class AnalyticResult:
    peak_age: Optional[float] = None
    avg_age: Optional[float] = None
    avg_age_lower: Optional[float] = None
    avg_age_upper: Optional[float] = None
    truncation_error: float = 0.0
    iterations: int = 0
    residual: float = 0.0

    @property
    def effective_upper(self) -> Optional[float]:
        """Tightest available upper bound on the average age."""
        bounds = [b for b in (self.avg_age_upper, self.peak_age) if b is not None]
        if self.avg_age_upper is None:
            return None
        return min(bounds)


def _require(spec: QueueSpec, *disciplines):
    if spec.discipline not in disciplines:
        raise ValueError(f"expected discipline in {disciplines}, got {spec.discipline!r}")


def _waiting_term(spec: QueueSpec) -> float:
    # (lam E[S^2] - rho) / (2 (1 - rho)): mean queueing delay of Ber/G/1
    return (spec.lam * spec.service.second_moment() - spec.rho) / (2.0 * (1.0 - spec.rho))


def _vacation_residual(v: DiscreteDist) -> float:
    return v.second_moment() / (2.0 * v.mean()) - 0.5


def peak_age_ber_g1(spec: QueueSpec) -> AnalyticResult:
    """Peak age of the FCFS Ber/G/1 queue: 1/lam + E[S] + waiting term."""
    _require(spec, FCFS)
    spec.check_stable()
    return AnalyticResult(peak_age=1.0 / spec.lam + spec.service.mean() + _waiting_term(spec))


def avg_age_ber_g1(spec: QueueSpec) -> AnalyticResult:
    _require(spec, FCFS)
    spec.check_stable()
    lam, rho = spec.lam, spec.rho
    ls = spec.service.pgf(1.0 - lam)
    avg = 1.0 + spec.service.mean() + (1.0 - lam) * (1.0 - rho) / (lam * ls) + _waiting_term(spec)
    return AnalyticResult(avg_age=avg, truncation_error=spec.service.truncation_bound)


def peak_age_ber_g1_vacation(spec: QueueSpec) -> AnalyticResult:
    """Ber/G/1 peak age plus the vacation residual E[V^2]/(2E[V]) - 1/2."""
    _require(spec, FCFS_VACATION)
    spec.check_stable()
    peak = 1.0 / spec.lam + spec.service.mean() + _waiting_term(spec) + _vacation_residual(spec.vacation)
    return AnalyticResult(peak_age=peak)


def avg_age_bounds_vacation(spec: QueueSpec) -> AnalyticResult:
    """Lower/upper average-age bounds for the vacation queue, as published.

    ``avg_age_lower``/``avg_age_upper`` are the two published expressions
    evaluated verbatim; ``peak_age`` carries the A_ave <= A_p bound, and
    :attr:`AnalyticResult.effective_upper` is the smaller of the two uppers.
    """
    _require(spec, FCFS_VACATION)
    spec.check_stable()
    g, rho = spec.lam, spec.rho
    S, V = spec.service, spec.vacation
    z = 1.0 - g
    ls = S.pgf(z)
    one_minus_lv = 1.0 - V.pgf(z)
    dlv = V.pgf_derivative(z)
    ev = V.mean()
    lower = (
        2.0 * (1.0 - rho) / (g * g * ev) * ((2.0 - g + 1.0 / ls) * one_minus_lv - g * dlv)
        + 0.5
        - 1.0 / g
        + 2.0 * S.mean()
        + _waiting_term(spec)
        + V.second_moment() / (2.0 * ev)
    )
    upper = (
        lower
        + (1.0 - rho) * one_minus_lv / g
        + (1.0 - g) * (1.0 - rho) * (one_minus_lv / (g * ls) - dlv)
    )
    peak = peak_age_ber_g1_vacation(spec).peak_age
    return AnalyticResult(
        peak_age=peak,
        avg_age_lower=lower,
        avg_age_upper=upper,
        truncation_error=S.truncation_bound + V.truncation_bound,
    )


@dataclass(frozen=True)
class CrossExpectations:
    """P(S <= X), E[S 1{S <= X}] and E[min(X, S)] for independent X, S."""

    p_serve: float
    e_s_given_serve: float  # E[S * 1{S <= X}], unconditional
    e_min: float
    truncation_error: float = 0.0


def cross_expectations(X: DiscreteDist, S: DiscreteDist) -> CrossExpectations:
    if X.is_geometric and S.is_geometric:
        a, b = X.param["p"], S.param["p"]
        q = (1.0 - a) * (1.0 - b)
        return CrossExpectations(b / (1.0 - q), b / (1.0 - q) ** 2, 1.0 / (1.0 - q))

    ks = S.support_upto(CROSS_TRUNCATION)
    s = np.arange(1, ks + 1)
    ps = S.pmf(s)
    reach = X.sf(s - 1)  # P(X >= s)
    p_serve = float(np.dot(ps, reach))
    e_s = float(np.dot(s * ps, reach))
    err = S.tail_first_moment(ks) if S.is_geometric else 0.0

    bounded = [d.max_value for d in (X, S) if d.bounded]
    km = min(bounded) if bounded else max(X.support_upto(CROSS_TRUNCATION), ks)
    k = np.arange(0, km)
    e_min = float(np.dot(X.sf(k), S.sf(k)))  # sum_{k>=0} P(X>k) P(S>k)
    if not bounded:
        err += S.tail_first_moment(km)
    return CrossExpectations(p_serve, e_s, e_min, err)


def _lcfs_terms(spec: QueueSpec):
    _require(spec, LCFS)
    X = spec.interarrival_dist
    ce = cross_expectations(X, spec.service)
    if ce.p_serve <= 0.0:
        raise AllPreemptedError("P(S <= X) = 0: every packet is preempted, peak age undefined")
    return X, ce


def lcfs_peak_age(spec: QueueSpec) -> AnalyticResult:
    X, ce = _lcfs_terms(spec)
    peak = X.mean() / ce.p_serve + ce.e_s_given_serve / ce.p_serve - 1.0
    return AnalyticResult(peak_age=peak, truncation_error=ce.truncation_error)


def lcfs_avg_age(spec: QueueSpec) -> AnalyticResult:
    X, ce = _lcfs_terms(spec)
    avg = 0.5 * X.second_moment() / X.mean() + ce.e_min / ce.p_serve - 0.5
    return AnalyticResult(avg_age=avg, truncation_error=ce.truncation_error)


@dataclass(frozen=True)
class DropTime:
    """Distribution of the G/G/inf drop time D = min_l {X_1 + ... + X_l + S_{l+1}}."""

    dist: DiscreteDist
    survival: np.ndarray  # survival[d] = P(D > d), d = 0..horizon
    mean: float
    horizon: int
    iterations: int
    residual: float
    truncation_error: float
    history: list = field(default_factory=list, repr=False)


def default_horizon(X: DiscreteDist, S: DiscreteDist) -> int:
    h = 1
    while float(S.sf(h)) + float(X.sf(h)) >= DROP_HORIZON_TAIL and h < DROP_HORIZON_CAP:
        h = min(DROP_HORIZON_CAP, h * 2)
    lo = h // 2
    while lo + 1 < h:  # bisect to the smallest qualifying horizon
        mid = (lo + h) // 2
        if float(S.sf(mid)) + float(X.sf(mid)) < DROP_HORIZON_TAIL:
            h = mid
        else:
            lo = mid
    return max(h, min(S.max_value, DROP_HORIZON_CAP))


def gginf_drop_time_distribution(
    X: DiscreteDist,
    S: DiscreteDist,
    horizon: Optional[int] = None,
    tol: float = DROP_TOL,
    max_iter: int = DROP_MAX_ITER,
    keep_history: bool = False,
) -> DropTime:
    """Fixed point of P(D > d) = P(S > d) * (1 - sum_x p_X(x) P(D <= d - x)).

    Starts from D = S and iterates on the survival function over
    d = 0..horizon until successive iterates differ by less than ``tol``.
    """
    if horizon is None:
        horizon = default_horizon(X, S)
    horizon = int(horizon)
    if horizon < S.max_value:
        raise ValueError(f"horizon {horizon} is below the largest stored service value {S.max_value}")
    if tol <= 0:
        raise ValueError("tol must be positive")

    d = np.arange(0, horizon + 1)
    surv_s = S.sf(d)
    px = X.pmf(d)  # px[0] = 0 since X >= 1
    use_fft = horizon > 2048
    surv = surv_s.copy()
    history = [surv.copy()] if keep_history else []
    residual = math.inf
    for it in range(1, max_iter + 1):
        cdf = 1.0 - surv
        conv = fftconvolve(px, cdf)[: horizon + 1] if use_fft else np.convolve(px, cdf)[: horizon + 1]
        new = surv_s * (1.0 - np.clip(conv, 0.0, 1.0))
        residual = float(np.max(np.abs(new - surv)))
        surv = new
        if keep_history:
            history.append(surv.copy())
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"drop-time fixed point did not converge in {max_iter} iterations (residual {residual:.3g})",
            residual=residual,
            iterations=max_iter,
        )

    # E[D] = sum_{d>=0} P(D > d); beyond the horizon P(D > d) <= P(S > d)
    if S.is_geometric:
        p = S.param["p"]
        trunc = (1.0 - p) ** (horizon + 1) / p
    else:
        trunc = float(np.sum(S.sf(np.arange(horizon + 1, S.max_value + 1)))) if S.max_value > horizon else 0.0
    mean = float(np.sum(surv))

    pmf = np.clip(surv[:-1] - surv[1:], 0.0, 1.0)
    tail = float(surv[-1])
    pmf[-1] = max(0.0, pmf[-1] + (1.0 - tail) - pmf.sum())
    dist = DiscreteDist(np.arange(1, horizon + 1), pmf, tail, "explicit")
    return DropTime(dist, surv, mean, horizon, it, residual, trunc, history)


def gginf_avg_age(spec: QueueSpec, **kwargs) -> AnalyticResult:
    _require(spec, GG_INF)
    X = spec.interarrival_dist
    drop = gginf_drop_time_distribution(X, spec.service, **kwargs)
    avg = 0.5 * X.second_moment() / X.mean() + drop.mean - 0.5
    return AnalyticResult(
        avg_age=avg,
        truncation_error=drop.truncation_error,
        iterations=drop.iterations,
        residual=drop.residual,
    )


def analyze(spec: QueueSpec, bounds: bool = True) -> AnalyticResult:
    """Every closed-form quantity available for the spec's discipline."""
    if spec.discipline == FCFS:
        peak, avg = peak_age_ber_g1(spec), avg_age_ber_g1(spec)
        return AnalyticResult(peak_age=peak.peak_age, avg_age=avg.avg_age, truncation_error=avg.truncation_error)
    if spec.discipline == FCFS_VACATION:
        if bounds:
            return avg_age_bounds_vacation(spec)
        return peak_age_ber_g1_vacation(spec)
    if spec.discipline == LCFS:
        peak, avg = lcfs_peak_age(spec), lcfs_avg_age(spec)
        return AnalyticResult(peak_age=peak.peak_age, avg_age=avg.avg_age, truncation_error=peak.truncation_error)
    return gginf_avg_age(spec)
