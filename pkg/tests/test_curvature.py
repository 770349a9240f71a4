"""Eigensolver, zero-coupling curvature anchors, and the sampled path."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from signchain.curvature import (
    psd_margin,
    quadratic_lambda2_k0,
    rho_k0,
    rho_ladder,
    rho_sampled,
    symmetric_eigs,
)

EIG_TOL = 1e-10
ANCHOR_TOL = 1e-12
DRIFT_TOL = 1e-10

# worked out once from the closed-form normal displays and kept frozen
ANCHORS = {
    1.5: (0.7290128235667759, 0.3485558556790107, 0.4781203353511159),
    2.0: (0.19979575156048354, 0.14142761684651403, 0.707860981737141),
    3.0: (0.004139999366943802, 0.003953771036494653, 0.9550173046073012),
}


@given(hnp.arrays(np.float64, (4, 4),
                  elements=st.floats(-5.0, 5.0, allow_nan=False)))
@settings(max_examples=120, deadline=None)
def test_jacobi_matches_library_eigensolver(a):
    sym = 0.5 * (a + a.T)
    vals, vecs = symmetric_eigs(sym)
    ref = np.linalg.eigvalsh(sym)
    assert np.max(np.abs(vals - ref)) < EIG_TOL
    # the columns must actually diagonalize the input
    assert np.max(np.abs(vecs.T @ sym @ vecs - np.diag(vals))) < EIG_TOL


def test_jacobi_rejects_asymmetric_input():
    with pytest.raises(ValueError):
        symmetric_eigs(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_psd_margin_sign():
    assert psd_margin(np.eye(3)) == pytest.approx(1.0)
    assert psd_margin(-np.eye(3)) == pytest.approx(-1.0)


@pytest.mark.parametrize("gamma", sorted(ANCHORS))
def test_zero_coupling_anchors(gamma):
    rho, lam2, lam4 = ANCHORS[gamma]
    rep = rho_k0(gamma)
    assert abs(rep.rho - rho) < ANCHOR_TOL
    assert abs(rep.lambda2 - lam2) < ANCHOR_TOL
    assert abs(rep.lambda4 - lam4) < ANCHOR_TOL
    assert rep.rho > 0.0
    assert abs(rep.lambda2_quadratic - quadratic_lambda2_k0(gamma)) \
        < ANCHOR_TOL


@pytest.mark.parametrize("gamma", sorted(ANCHORS))
def test_curvature_is_horizon_independent(gamma):
    ref = rho_k0(gamma).rho
    for horizon in (("discrete", 1), ("discrete", 2), ("discrete", 5),
                    ("poisson", 1.0, 1e-10)):
        assert abs(rho_k0(gamma, horizon).rho - ref) < DRIFT_TOL


def test_ratios_agree_across_states():
    rep = rho_k0(2.0)
    assert np.max(np.abs(rep.ratios - rep.ratios[0])) < DRIFT_TOL
    assert np.min(rep.m_psd_margins) > -1e-10
    assert np.min(rep.n_psd_margins) > -1e-10


def test_sampled_estimator_consistent_at_zero_coupling():
    exact = rho_k0(2.0).rho
    est = rho_sampled(2.0, 0.0, 0.2, pair_distance=1, window_radius=1,
                      samples=3000, seed=6)
    assert est.stderr > 0.0
    assert abs(est.rho - exact) < 4.0 * est.stderr + 0.02
    assert est.cell_ratios.size > 0
    assert 0 <= est.argmin_state <= 3


def test_rho_ladder_shares_noise_across_rungs():
    ladder = rho_ladder(2.0, 0.3, (0.02, 0.0), pair_distance=1,
                        window_radius=1, samples=1500, seed=9)
    assert list(ladder["couplings"]) == [0.02, 0.0]
    assert len(ladder["estimates"]) == 2
    solo = rho_sampled(2.0, 0.0, 0.3, pair_distance=1, window_radius=1,
                       samples=1500, seed=9)
    # the zero-coupling rung reuses the same noise as a direct call
    assert ladder["estimates"][1].rho == pytest.approx(solo.rho)
    assert ladder["rho_drops"].shape[1] == 2
