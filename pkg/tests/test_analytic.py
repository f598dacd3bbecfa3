import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from aoiq import analytic
from aoiq.analytic import (
    FCFS, FCFS_VACATION, GG_INF, LCFS, QueueSpec, analyze, avg_age_ber_g1, avg_age_bounds_vacation,
    cross_expectations, gginf_avg_age, gginf_drop_time_distribution, lcfs_avg_age, lcfs_peak_age,
    peak_age_ber_g1, peak_age_ber_g1_vacation,
)
from aoiq.dist import make_deterministic, make_explicit, make_geometric, make_uniform
from aoiq.errors import AllPreemptedError, ConvergenceError, StabilityError

GEO75 = make_geometric(0.75)


def fcfs(lam, S):
    return QueueSpec(FCFS, S, arrival_rate=lam)


def vac(lam, S, V):
    return QueueSpec(FCFS_VACATION, S, arrival_rate=lam, vacation=V)


def lcfs(X, S):
    return QueueSpec(LCFS, S, interarrival=X)


def gginf(X, S):
    return QueueSpec(GG_INF, S, interarrival=X)


# -- Ber/G/1 ---------------------------------------------------------------------

def test_unit_service_peak_and_avg_are_three():
    spec = fcfs(0.5, make_deterministic(1))
    assert peak_age_ber_g1(spec).peak_age == pytest.approx(3.0, abs=1e-12)
    assert avg_age_ber_g1(spec).avg_age == pytest.approx(3.0, abs=1e-12)


def test_geometric_service_worked_example():
    spec = fcfs(0.3, GEO75)
    peak = 10 / 3 + 4 / 3 + (0.3 * 20 / 9 - 0.4) / 1.2
    avg = 1 + 4 / 3 + 0.7 * 0.6 / (0.3 * (0.525 / 0.825)) + (0.3 * 20 / 9 - 0.4) / 1.2
    assert peak_age_ber_g1(spec).peak_age == pytest.approx(peak, abs=1e-12)
    assert peak == pytest.approx(4.8889, abs=1e-4)
    assert avg_age_ber_g1(spec).avg_age == pytest.approx(avg, abs=1e-12)
    assert avg == pytest.approx(4.7556, abs=1e-4)
    assert avg_age_ber_g1(spec).avg_age <= peak_age_ber_g1(spec).peak_age


@pytest.mark.parametrize("lam,S", [(0.9, GEO75), (0.5, make_deterministic(2)), (1.0, make_deterministic(1))])
def test_unstable_specs_raise(lam, S):
    with pytest.raises(StabilityError):
        peak_age_ber_g1(fcfs(lam, S))
    with pytest.raises(StabilityError):
        avg_age_ber_g1(fcfs(lam, S))
    with pytest.raises(StabilityError):
        peak_age_ber_g1_vacation(vac(lam, S, make_deterministic(2)))


def test_spec_structure_validation():
    with pytest.raises(ValueError):
        QueueSpec(FCFS, GEO75, interarrival=make_geometric(0.5))
    with pytest.raises(ValueError):
        QueueSpec(FCFS_VACATION, GEO75, arrival_rate=0.3)
    with pytest.raises(ValueError):
        QueueSpec(FCFS, GEO75, arrival_rate=0.3, vacation=make_deterministic(2))
    with pytest.raises(ValueError):
        QueueSpec("fifo", GEO75, arrival_rate=0.3)
    with pytest.raises(ValueError):
        QueueSpec(FCFS, GEO75, arrival_rate=0.0)
    with pytest.raises(ValueError):
        QueueSpec(LCFS, GEO75, arrival_rate=0.5, interarrival=make_geometric(0.5))


def test_rate_only_renewal_spec_is_geometric():
    spec = QueueSpec(LCFS, make_geometric(0.5), arrival_rate=0.5)
    assert spec.interarrival_dist.mean() == pytest.approx(2)
    assert lcfs_avg_age(spec).avg_age == pytest.approx(3.0, abs=1e-12)


# -- vacations ---------------------------------------------------------------------

def test_vacation_worked_examples():
    base = peak_age_ber_g1(fcfs(0.3, GEO75)).peak_age
    assert peak_age_ber_g1_vacation(vac(0.3, GEO75, make_geometric(0.5))).peak_age == pytest.approx(base + 1.0, abs=1e-12)
    assert peak_age_ber_g1_vacation(vac(0.3, GEO75, make_deterministic(4))).peak_age == pytest.approx(base + 1.5, abs=1e-12)
    assert peak_age_ber_g1_vacation(vac(0.3, GEO75, make_deterministic(1))).peak_age == pytest.approx(base, abs=1e-12)


def test_vacation_bounds_are_ordered_and_carry_peak():
    r = avg_age_bounds_vacation(vac(0.3, GEO75, make_geometric(0.25)))
    assert r.avg_age_lower <= r.avg_age_upper
    assert r.peak_age == pytest.approx(peak_age_ber_g1_vacation(vac(0.3, GEO75, make_geometric(0.25))).peak_age)
    assert r.effective_upper == min(r.avg_age_upper, r.peak_age)


def test_vacation_lower_bound_frozen_value():
    # independent re-evaluation of the published lower-bound expression
    g, S, V = 0.3, GEO75, make_deterministic(1)
    rho, ls, lv, dlv = 0.4, 0.525 / 0.825, 0.7, 1.0
    wait = (g * 20 / 9 - rho) / (2 * (1 - rho))
    lb = 2 * (1 - rho) / (g * g * 1) * ((2 - g + 1 / ls) * (1 - lv) - g * dlv) + 0.5 - 1 / g + 2 * 4 / 3 + wait + 0.5
    assert avg_age_bounds_vacation(vac(g, S, V)).avg_age_lower == pytest.approx(lb, rel=1e-12)


vac_laws = st.one_of(
    st.floats(0.05, 1.0).map(make_geometric),
    st.integers(1, 10).map(make_deterministic),
    st.integers(1, 8).map(lambda m: make_uniform(1, 2 * m - 1)),
)
services = st.one_of(
    st.floats(0.3, 1.0).map(make_geometric),
    st.integers(1, 4).map(make_deterministic),
    st.integers(1, 3).map(lambda b: make_uniform(1, b)),
)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), services, vac_laws)
def test_vacation_term_separates(lam, S, V):
    assume(lam * S.mean() < 0.98)
    p5 = peak_age_ber_g1_vacation(vac(lam, S, V)).peak_age
    p3 = peak_age_ber_g1(fcfs(lam, S)).peak_age
    assert p5 - p3 == pytest.approx(V.second_moment() / (2 * V.mean()) - 0.5, abs=1e-9 * p5)
    r = avg_age_bounds_vacation(vac(lam, S, V))
    assert math.isfinite(r.avg_age_lower) and math.isfinite(r.avg_age_upper)
    assert r.avg_age_lower <= r.avg_age_upper + 1e-12 * abs(r.avg_age_upper)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.7), st.integers(1, 10))
def test_deterministic_vacation_is_minimal(lam, v):
    S = GEO75
    assume(lam * S.mean() < 0.98)
    det = peak_age_ber_g1_vacation(vac(lam, S, make_deterministic(v))).peak_age
    assert det - peak_age_ber_g1(fcfs(lam, S)).peak_age == pytest.approx((v - 1) / 2, abs=1e-9)
    for V in (make_geometric(1 / v), make_uniform(1, 2 * v - 1)):
        assert det <= peak_age_ber_g1_vacation(vac(lam, S, V)).peak_age + 1e-12


# -- cross expectations and LCFS ------------------------------------------------------

def brute_cross(X, S, kmax=400):
    k = np.arange(1, kmax + 1)
    px, ps = X.pmf(k), S.pmf(k)
    joint = np.outer(px, ps)  # [x, s]
    xs, ss = np.meshgrid(k, k, indexing="ij")
    served = ss <= xs
    return (joint[served].sum(), (joint * ss)[served].sum(), (joint * np.minimum(xs, ss)).sum())


def test_cross_expectations_geometric_pair():
    ce = cross_expectations(make_geometric(0.5), make_geometric(0.5))
    assert (ce.p_serve, ce.e_s_given_serve, ce.e_min) == pytest.approx((2 / 3, 8 / 9, 4 / 3), abs=1e-12)
    assert (ce.p_serve, ce.e_s_given_serve, ce.e_min) == pytest.approx(brute_cross(make_geometric(0.5), make_geometric(0.5)), abs=1e-12)


@pytest.mark.parametrize("X,S", [
    (make_geometric(0.3), make_uniform(1, 4)),
    (make_uniform(1, 5), make_geometric(0.4)),
    (make_deterministic(3), make_explicit({1: 0.2, 3: 0.5, 6: 0.3})),
    (make_geometric(0.2), make_geometric(0.7)),
    (make_uniform(2, 6), make_deterministic(3)),
])
def test_cross_expectations_match_double_sum(X, S):
    ce = cross_expectations(X, S)
    assert (ce.p_serve, ce.e_s_given_serve, ce.e_min) == pytest.approx(brute_cross(X, S), abs=1e-9)


def test_cross_expectations_trivial_cases():
    ce = cross_expectations(make_uniform(1, 9), make_deterministic(1))
    assert (ce.p_serve, ce.e_s_given_serve, ce.e_min) == pytest.approx((1, 1, 1))
    assert cross_expectations(make_deterministic(2), make_deterministic(3)).p_serve == 0


def test_lcfs_worked_example():
    spec = lcfs(make_geometric(0.5), make_geometric(0.5))
    assert lcfs_peak_age(spec).peak_age == pytest.approx(10 / 3, abs=1e-12)
    assert lcfs_avg_age(spec).avg_age == pytest.approx(3.0, abs=1e-12)


def test_lcfs_all_preempted():
    spec = lcfs(make_deterministic(2), make_deterministic(3))
    with pytest.raises(AllPreemptedError):
        lcfs_peak_age(spec)
    with pytest.raises(AllPreemptedError):
        lcfs_avg_age(spec)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1.0))
def test_lcfs_unit_service_identity(lam):
    spec = lcfs(make_geometric(lam), make_deterministic(1))
    assert lcfs_peak_age(spec).peak_age == pytest.approx(1 / lam, rel=1e-12)
    assert lcfs_avg_age(spec).avg_age == pytest.approx(1 / lam, rel=1e-12)


# -- G/G/inf ------------------------------------------------------------------------

def test_deterministic_service_drop_time_is_service():
    for X in (make_geometric(0.5), make_uniform(1, 4), make_deterministic(1)):
        dt = gginf_drop_time_distribution(X, make_deterministic(3))
        assert dt.mean == pytest.approx(3.0, abs=1e-12)
        assert dt.dist.pmf(3) == pytest.approx(1.0, abs=1e-12)


def test_gginf_closed_cases():
    assert gginf_avg_age(gginf(make_geometric(0.5), make_deterministic(2))).avg_age == pytest.approx(3.0, abs=1e-12)
    assert gginf_avg_age(gginf(make_deterministic(1), make_deterministic(1))).avg_age == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("X", [make_geometric(0.3), make_uniform(1, 6), make_explicit({1: 0.5, 4: 0.5})])
def test_gginf_unit_service_closed_form(X):
    avg = gginf_avg_age(gginf(X, make_deterministic(1))).avg_age
    assert avg == pytest.approx(0.5 * X.second_moment() / X.mean() + 0.5, abs=1e-12)


def test_gginf_unit_service_matches_lcfs_for_geometric():
    X = make_geometric(0.4)
    a = gginf_avg_age(gginf(X, make_deterministic(1))).avg_age
    assert a == pytest.approx(lcfs_avg_age(lcfs(X, make_deterministic(1))).avg_age, abs=1e-12)
    assert a == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("X,S", [
    (make_geometric(0.5), make_geometric(0.5)),
    (make_uniform(1, 3), make_geometric(0.3)),
    (make_geometric(0.2), make_uniform(1, 9)),
])
def test_survival_non_increasing_across_iterations(X, S):
    dt = gginf_drop_time_distribution(X, S, keep_history=True)
    h = np.array(dt.history)
    assert np.all(np.diff(h, axis=0) <= 1e-15)
    assert np.all(np.diff(dt.survival) <= 1e-15)
    assert dt.dist.probs.sum() + dt.dist.tail_mass == pytest.approx(1.0, abs=1e-12)
    assert dt.survival[-1] <= S.sf(dt.horizon) + 1e-12


def test_drop_time_monte_carlo_small():
    # 2e5 replications of min_{l<=50}(X_1 + ... + X_l + S_{l+1})
    X, S = make_geometric(0.5), make_geometric(0.5)
    rng = np.random.default_rng(11)
    n, L = 200_000, 50
    x = X.sample(rng, (n, L))
    s = S.sample(rng, (n, L + 1))
    z = np.concatenate([np.zeros((n, 1), dtype=np.int64), np.cumsum(x, axis=1)], axis=1)
    d = (z + s).min(axis=1)
    mean = gginf_drop_time_distribution(X, S).mean
    assert abs(d.mean() - mean) < 3 * d.std(ddof=1) / math.sqrt(n)


def test_drop_time_convergence_error_reports_residual():
    with pytest.raises(ConvergenceError) as info:
        gginf_drop_time_distribution(make_geometric(0.1), make_geometric(0.05), max_iter=2)
    assert info.value.residual > 0 and info.value.iterations == 2


def test_drop_time_rejects_short_horizon():
    with pytest.raises(ValueError):
        gginf_drop_time_distribution(make_geometric(0.5), make_deterministic(5), horizon=3)


def test_fft_path_agrees_with_direct():
    X, S = make_geometric(0.05), make_geometric(0.02)
    a = gginf_drop_time_distribution(X, S, horizon=2048).mean
    b = gginf_drop_time_distribution(X, S, horizon=2049).mean
    assert a == pytest.approx(b, rel=1e-9)


# -- everything is at least one slot ------------------------------------------------------

renewal = st.one_of(
    st.floats(0.05, 1.0).map(make_geometric),
    st.integers(1, 6).map(make_deterministic),
    st.tuples(st.integers(1, 4), st.integers(0, 5)).map(lambda t: make_uniform(t[0], t[0] + t[1])),
)


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([FCFS, FCFS_VACATION, LCFS, GG_INF]), st.floats(0.05, 0.95), renewal, renewal, renewal)
def test_every_analytic_value_at_least_one(disc, lam, X, S, V):
    if disc in (FCFS, FCFS_VACATION):
        assume(lam * S.mean() < 0.98)
        spec = QueueSpec(disc, S, arrival_rate=lam, vacation=V if disc == FCFS_VACATION else None)
    else:
        assume(cross_expectations(X, S).p_serve > 0)
        spec = QueueSpec(disc, S, interarrival=X)
    r = analyze(spec, bounds=False)
    for v in (r.peak_age, r.avg_age):
        if v is not None:
            assert v >= 1 - 1e-12


def test_analyze_dispatch():
    assert analyze(fcfs(0.3, GEO75)).avg_age == pytest.approx(avg_age_ber_g1(fcfs(0.3, GEO75)).avg_age)
    r = analyze(vac(0.3, GEO75, make_deterministic(2)))
    assert r.avg_age is None and r.avg_age_lower is not None
    assert analyze(vac(0.3, GEO75, make_deterministic(2)), bounds=False).avg_age_lower is None
    assert analytic.DISCIPLINES == (FCFS, FCFS_VACATION, LCFS, GG_INF)
