"""Dynamics layer: determinism, light cone, and the noise contract."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtri

from signchain.lattice import (
    DYNAMICS_STREAM,
    LatticeParams,
    NoiseStream,
    SpinConfiguration,
    evolve_batch,
    exact_ring_size,
    local_field,
    max_exact_steps,
    normal_cdf,
    poisson_step_counts,
    run_discrete,
    run_poissonized,
    step,
    threshold_table,
)
from signchain.verify import _adaptive_simpson

EXACT_TOL = 1e-13
CDF_TOL = 1e-12


def test_step_is_deterministic():
    params = LatticeParams(16, 0.3, 2.0, seed=11)
    cfg = SpinConfiguration.random(16, seed=4)
    a = run_discrete(cfg, params, 7)
    b = run_discrete(cfg, params, 7)
    assert np.array_equal(a.spins, b.spins)


def test_replicas_are_distinct_streams():
    params = LatticeParams(16, 0.3, 2.0, seed=11)
    cfg = SpinConfiguration.all_plus(16)
    noise = NoiseStream(params.seed)
    a = run_discrete(cfg, params, 5, noise=noise, replica=0)
    b = run_discrete(cfg, params, 5, noise=noise, replica=1)
    assert not np.array_equal(a.spins, b.spins)


def test_threshold_step_equals_normal_draw():
    # sign(h + z) with z = ndtri(u) and sign(0) := +1 must match the
    # threshold comparison u >= Phi(-h) used by the fast path
    params = LatticeParams(12, 0.4, 1.7, seed=3)
    cfg = SpinConfiguration.random(12, seed=8)
    noise = NoiseStream(params.seed)
    for m in range(4):
        h = local_field(cfg.spins, params)
        u = noise.uniform(DYNAMICS_STREAM, 0, m, np.arange(12))
        by_hand = np.where(h + ndtri(u) >= 0, 1, -1).astype(np.int8)
        cfg = step(cfg, params, noise=noise, step_index=m)
        assert np.array_equal(cfg.spins, by_hand)


def test_local_field_values():
    params = LatticeParams(5, 0.25, 2.0, seed=0)
    spins = np.array([1, 1, -1, 1, -1], dtype=np.int8)
    h = local_field(spins, params)
    # site 0: neighbors are sites 4 and 1, self term (1 - gamma) s
    assert abs(h[0] - (0.25 * (-1 + 1) + (1 - 2.0) * 1)) < EXACT_TOL
    assert abs(h[2] - (0.25 * (1 + 1) + (1 - 2.0) * (-1))) < EXACT_TOL


def test_light_cone_exactness():
    # changing the initial spin n+1 sites away cannot reach x1 in n
    # steps; at distance exactly n it generally does
    n = 6
    d = 1
    ring = exact_ring_size(n, d) + 4
    params = LatticeParams(ring, 1.2, 1.05, seed=21)
    x1 = ring // 2
    base = SpinConfiguration.all_plus(ring)
    noise = NoiseStream(params.seed)

    far = base.with_pair(x1 + n + 1, x1 - n - 1, -1, -1)
    hit = base.with_pair(x1 + n, x1 - n, -1, -1)
    saw_difference = False
    for replica in range(64):
        end_base = run_discrete(base, params, n, noise=noise,
                                replica=replica)
        end_far = run_discrete(far, params, n, noise=noise, replica=replica)
        assert end_base.spins[x1] == end_far.spins[x1]
        end_hit = run_discrete(hit, params, n, noise=noise, replica=replica)
        saw_difference |= end_hit.spins[x1] != end_base.spins[x1]
    assert saw_difference


def test_zero_coupling_sites_decouple():
    # at K = 0 a site's trajectory ignores every other site
    ring = 9
    params = LatticeParams(ring, 0.0, 1.8, seed=5)
    noise = NoiseStream(params.seed)
    a = SpinConfiguration.all_plus(ring)
    b = SpinConfiguration.from_values([1 if i == 4 else -1
                                       for i in range(ring)])
    for replica in range(16):
        ea = run_discrete(a, params, 9, noise=noise, replica=replica)
        eb = run_discrete(b, params, 9, noise=noise, replica=replica)
        assert ea.spins[4] == eb.spins[4]


def test_batch_grouping_does_not_change_endpoints():
    ring = 11
    params = LatticeParams(ring, 0.2, 2.2, seed=13)
    noise = NoiseStream(params.seed)
    spins = np.tile(SpinConfiguration.all_plus(ring).spins, (6, 1))
    steps = np.array([0, 3, 1, 4, 2, 5])
    ids = np.arange(6)
    whole = evolve_batch(spins.copy(), params, noise, DYNAMICS_STREAM,
                         ids, steps)
    parts = np.vstack([
        evolve_batch(spins[:2].copy(), params, noise, DYNAMICS_STREAM,
                     ids[:2], steps[:2]),
        evolve_batch(spins[2:].copy(), params, noise, DYNAMICS_STREAM,
                     ids[2:], steps[2:]),
    ])
    assert np.array_equal(whole, parts)
    for r in range(6):
        ref = run_discrete(SpinConfiguration.all_plus(ring), params,
                           int(steps[r]), noise=noise, replica=r)
        assert np.array_equal(whole[r], ref.spins)


def test_poissonized_run_uses_dedicated_count_stream():
    params = LatticeParams(9, 0.0, 2.0, seed=2)
    cfg = SpinConfiguration.all_plus(9)
    final, n = run_poissonized(cfg, params, 3.0, replica=7)
    noise = NoiseStream(params.seed)
    assert n == poisson_step_counts(3.0, noise, 7)
    again = run_discrete(cfg, params, n, noise=noise, replica=7)
    assert np.array_equal(final.spins, again.spins)


def test_poisson_counts_match_direct_inversion():
    t = 2.5
    noise = NoiseStream(42)
    counts = poisson_step_counts(t, noise, np.arange(500))
    # independent inversion of the same uniforms through the Poisson CDF
    from scipy.stats import poisson

    u = noise.uniform(1, np.arange(500), 0, 0)
    assert np.array_equal(counts, poisson.ppf(u, t).astype(np.int64))


def test_normal_cdf_against_quadrature():
    # integrate the density with the in-house adaptive Simpson rule
    dens = lambda x: np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    for x in (-2.0, -0.5, 0.0, 0.31, 1.0, 2.7):
        quad = 0.5 + _adaptive_simpson(dens, 0.0, x, 1e-13)
        assert abs(normal_cdf(x) - quad) < CDF_TOL


def test_noise_is_counter_addressed():
    noise = NoiseStream(0)
    base = noise.uniform(0, 3, 5, 7)
    assert noise.uniform(0, 3, 5, 7) == base
    assert noise.uniform(0, 3, 5, 8) != base
    assert noise.uniform(0, 3, 6, 7) != base
    assert noise.uniform(0, 4, 5, 7) != base
    assert noise.uniform(1, 3, 5, 7) != base
    assert 0.0 < base < 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        LatticeParams(2, 0.0, 2.0)
    with pytest.raises(ValueError):
        LatticeParams(8, 0.0, 1.0)
    with pytest.raises(ValueError):
        LatticeParams(8, np.inf, 2.0)
    with pytest.raises(ValueError):
        SpinConfiguration(np.array([1, 2, 1]))


@given(st.floats(1.01, 8.0), st.floats(-2.0, 2.0))
@settings(max_examples=60, deadline=None)
def test_threshold_table_is_probability_grid(gamma, coupling):
    params = LatticeParams(8, coupling, gamma)
    table = threshold_table(params)
    assert table.shape == (2, 3)
    # extreme fields saturate Phi in float64, so bounds are closed
    assert np.all((table >= 0.0) & (table <= 1.0))
    if coupling > 0:
        # larger neighbor sum pushes toward +1: thresholds fall
        assert np.all(np.diff(table, axis=1) <= 0)


@given(st.integers(0, 200), st.integers(1, 40))
@settings(max_examples=80, deadline=None)
def test_exact_ring_size_guarantee(n_steps, pair_distance):
    ring = exact_ring_size(n_steps, pair_distance)
    assert max_exact_steps(ring, pair_distance) >= n_steps
