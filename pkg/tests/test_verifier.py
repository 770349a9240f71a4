"""Endpoint statistics against shared-clock closed forms, and the
time-integral bound against independent quadrature routes."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signchain.lattice import LatticeParams, exact_ring_size
from signchain.kernels import poisson_quantile, step_autocorrelation
from signchain.verify import (
    CouplingSchedule,
    _adaptive_simpson,
    _bessel_cov,
    _bessel_var,
    _mean,
    _pattern_values_f,
    bound_time_integral,
    check_local_poincare,
    correlation_bound_check,
    endpoint_pattern_counts,
    ergodic_limit_probe,
    jackknife,
    pair_indicator,
    pair_product,
    pair_sum,
    variance_under_pt,
)

QUAD_TOL = 1e-10
ROUTE_TOL = 1e-9
MC_SIGMA = 4.0

S1_VALUES = np.array([1.0, -1.0, 1.0, -1.0])
S2_VALUES = np.array([1.0, 1.0, -1.0, -1.0])


def _ring_for(t, d=1):
    return exact_ring_size(poisson_quantile(t, 1.0 - 1e-9) + 2, d)


def _counts(t, gamma=2.0, coupling=0.0, replicas=200_000, seed=77, d=1):
    ring = _ring_for(t, d)
    params = LatticeParams(ring, coupling, gamma, seed=seed)
    eta = np.ones(ring, dtype=np.int8)
    x1 = (ring - d) // 2
    return params, endpoint_pattern_counts(params, eta, x1, x1 + d,
                                           ("poisson", t), replicas,
                                           seed=seed)


def test_pair_functions():
    assert np.array_equal(pair_sum().values, S1_VALUES + S2_VALUES)
    assert np.array_equal(pair_product().values, S1_VALUES * S2_VALUES)
    ind = pair_indicator(2).values
    assert np.array_equal(ind, [0.0, 0.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        pair_indicator(5)


def test_endpoint_means_match_closed_forms():
    # under the single shared clock at zero coupling, starting all-plus:
    # E s1(T) = exp(-(1 - theta) T), E s1 s2(T) = exp(-(1 - theta^2) T)
    t, gamma = 2.0, 2.0
    th = step_autocorrelation(gamma)
    params, pc = _counts(t, gamma)
    vals1 = _pattern_values_f(pc, S1_VALUES, params.n_sites)
    mean1, se1 = jackknife(pc.counts, lambda c: _mean(c, vals1))
    assert abs(mean1 - np.exp(-(1.0 - th) * t)) < MC_SIGMA * se1

    vals12 = _pattern_values_f(pc, S1_VALUES * S2_VALUES, params.n_sites)
    mean12, se12 = jackknife(pc.counts, lambda c: _mean(c, vals12))
    assert abs(mean12 - np.exp(-(1.0 - th * th) * t)) < MC_SIGMA * se12


def test_endpoint_variance_matches_closed_form():
    t, gamma = 1.0, 2.0
    th = step_autocorrelation(gamma)
    params, pc = _counts(t, gamma, replicas=300_000, seed=51)
    var, se = variance_under_pt(pc, pair_product(), params.n_sites)
    # s1 s2 is a sign, so Var = 1 - (E s1 s2)^2
    exact = 1.0 - np.exp(-(1.0 - th * th) * t) ** 2
    assert abs(var - exact) < MC_SIGMA * se


def test_bessel_statistics_against_numpy():
    rng = np.random.default_rng(3)
    counts = rng.integers(50, 200, size=4).astype(np.float64)
    a = np.array([1.0, -1.0, 0.5, 2.0])
    b = np.array([0.0, 1.0, -0.5, 1.5])
    sample_a = np.repeat(a, counts.astype(int))
    sample_b = np.repeat(b, counts.astype(int))
    assert _bessel_var(counts, a) == pytest.approx(np.var(sample_a, ddof=1))
    assert _bessel_cov(counts, a, b) == pytest.approx(
        np.cov(sample_a, sample_b, ddof=1)[0, 1])


def test_jackknife_of_linear_statistic():
    # for a mean, the jackknife error equals the batch-mean stderr
    rng = np.random.default_rng(9)
    counts = rng.integers(100, 400, size=(8, 4)).astype(np.float64)
    vals = np.array([2.0, -1.0, 0.0, 1.0])
    est, err = jackknife(counts, lambda c: _mean(c, vals))
    assert est == pytest.approx(_mean(counts.sum(axis=0), vals))
    assert err > 0.0


def test_adaptive_simpson_accuracy():
    assert abs(_adaptive_simpson(lambda x: x ** 4, 0.0, 1.0, 1e-12)
               - 0.2) < QUAD_TOL
    assert abs(_adaptive_simpson(np.exp, 0.0, 2.0, 1e-12)
               - (np.e ** 2 - 1.0)) < QUAD_TOL
    assert abs(_adaptive_simpson(np.sin, 0.0, np.pi, 1e-12) - 2.0) < QUAD_TOL


def test_bound_integral_routes_agree():
    for rho in (0.1, 0.5, 1.0):
        for t in (0.5, 2.0, 10.0):
            scalar = bound_time_integral(t, rho)
            via_callable = bound_time_integral(t, lambda u, r=rho: r)
            grid = np.linspace(0.0, max(t, 1.0), 400)
            via_table = bound_time_integral(
                t, (grid, np.full(grid.size, rho)))
            assert abs(scalar - via_callable) < ROUTE_TOL
            assert abs(scalar - via_table) < ROUTE_TOL


def test_bound_integral_limits():
    for rho in (0.1, 0.5, 1.0):
        # monotone in t with limit 1 / rho
        prev = 0.0
        for t in (0.5, 1.0, 2.0, 4.0, 8.0):
            cur = bound_time_integral(t, rho)
            assert cur > prev
            prev = cur
        assert abs(bound_time_integral(400.0 / rho, rho) - 1.0 / rho) < 1e-8


def test_bound_integral_piecewise_table_vs_callable():
    rho_fn = lambda u: 0.1 + 0.05 * np.minimum(u, 4.0)
    grid = np.linspace(0.0, 6.0, 2001)
    table = (grid, rho_fn(grid))
    for t in (0.5, 2.0, 5.0):
        assert abs(bound_time_integral(t, table)
                   - bound_time_integral(t, rho_fn)) < 1e-6


def test_coupling_schedule_validation():
    CouplingSchedule(0.0, 0.0)
    CouplingSchedule(0.1, 2.0)
    with pytest.raises(ValueError):
        CouplingSchedule(0.1, 0.0)
    with pytest.raises(ValueError):
        CouplingSchedule(np.inf, 1.0)
    sched = CouplingSchedule(0.2, 1.0)
    assert sched.coupling_at(0.0) == pytest.approx(0.2)
    assert sched.coupling_at(2.0) == pytest.approx(0.2 * np.exp(-2.0))


def test_poincare_reports_shape_and_bessel_identity():
    t = 1.0
    ring = _ring_for(t)
    params = LatticeParams(ring, 0.0, 2.0, seed=15)
    eta = np.ones(ring, dtype=np.int8)
    x1 = ring // 2
    reports = check_local_poincare(params, eta, x1, x1 + 1, t,
                                   (pair_sum(), pair_product()),
                                   50_000, rho_k0_value(), seed=15)
    assert [r.function for r in reports] == ["sum", "product"]
    for r in reports:
        assert r.lhs >= 0.0
        assert r.rhs > 0.0
        assert r.passed


def rho_k0_value():
    from signchain.curvature import rho_k0

    return rho_k0(2.0).rho


def test_correlation_identity_residual():
    t = 1.0
    ring = _ring_for(t)
    params = LatticeParams(ring, 0.0, 2.0, seed=19)
    eta = np.ones(ring, dtype=np.int8)
    x1 = ring // 2
    rep = correlation_bound_check(params, eta, x1, x1 + 1, t, 50_000,
                                  rho_k0_value(), seed=19)
    # Var(f1 + f2) = Var f1 + Var f2 + 2 Cov holds exactly per sample
    assert rep.identity_residual < 1e-10
    assert rep.chain_passed


def test_ergodic_probe_rows():
    ring = _ring_for(2.0)
    params = LatticeParams(ring, 0.0, 2.0, seed=23)
    eta = np.ones(ring, dtype=np.int8)
    x1 = ring // 2
    rows = ergodic_limit_probe(params, eta, x1, x1 + 1, [0.5, 2.0],
                               pair_sum(), 40_000, rho_k0_value(), seed=23)
    assert [r["t"] for r in rows] == [0.5, 2.0]
    for r in rows:
        assert r["lhs"] <= r["rhs"] + MC_SIGMA * (r["lhs_stderr"]
                                                  + r["rhs_stderr"])
        assert r["passed"]


@given(st.floats(0.05, 2.0), st.floats(0.1, 3.0))
@settings(max_examples=30, deadline=None)
def test_bound_integral_positive_and_bounded(t, rho):
    val = bound_time_integral(t, rho)
    assert 0.0 < val <= 1.0 / rho + 1e-12
