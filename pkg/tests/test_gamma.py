"""Form matrices against an operator-algebra oracle.

The acceptance suite checks the same identities by enumerating the
two-step outcome tree; here the oracle is the generator calculus
itself: with L = P - I on the restricted pair states,

    Gamma(u, v) = (P(uv) - u Pv - v Pu + uv) / 2
    Gamma2(g)   = (L Gamma(g, g) - 2 Gamma(g, Lg)) / 2

and the quadratic forms must satisfy f' N f = 2 Gamma(g, g)(i) and
f' M f = 4 Gamma2(g)(i) with g the horizon-evolved f.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signchain.lattice import LatticeParams
from signchain.kernels import STATE_PAIRS, step_autocorrelation
from signchain.gamma import (
    _resolve_entries_ld,
    decompose,
    explicit_starred_k0,
    gamma2_from_matrix,
    gamma_from_matrix,
    gamma_of_f,
    pair_matrices_k0,
    resolve_kernel_k0,
    similarity_check_k0,
    starred_pair_k0,
)

FORM_TOL = 1e-10
DISPLAY_TOL = 1e-12
GAMMAS = (1.5, 2.0, 3.0)
HORIZONS = (("discrete", 1), ("discrete", 3), ("poisson", 0.9, 1e-10))

# endpoint mean of Gamma at the all-plus configuration, gamma = 2:
# 4 pm (1 + pm) for the pair sum and 1 - theta^2 for the pair product
SUM_GAMMA_ALL_PLUS = 6.1968229112227355
PRODUCT_GAMMA_ALL_PLUS = 0.5339350573256079


def _apply(kernel_entries, g):
    # entries[w, j] = P(end w | start j), so (Pg)(j) sums the column
    return kernel_entries.T @ g


def _oracle_forms(gamma, horizon, state, f):
    b_h = resolve_kernel_k0(gamma, horizon).entries
    q = resolve_kernel_k0(gamma, ("discrete", 1)).entries
    g = _apply(b_h, f)

    def gam(u, v):
        return 0.5 * (_apply(q, u * v) - u * _apply(q, v)
                      - v * _apply(q, u) + u * v)

    lg = _apply(q, g) - g
    gamma_vec = gam(g, g)
    gamma2_vec = 0.5 * ((_apply(q, gamma_vec) - gamma_vec)
                        - 2.0 * gam(g, lg))
    return gamma_vec[state], gamma2_vec[state]


@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("horizon", HORIZONS)
def test_forms_match_operator_calculus(gamma, horizon):
    rng = np.random.default_rng(7)
    for state in range(4):
        gp = pair_matrices_k0(gamma, horizon, state)
        for _ in range(10):
            f = rng.uniform(-1.0, 1.0, 4)
            g1, g2 = _oracle_forms(gamma, horizon, state, f)
            assert abs(f @ gp.n_matrix @ f - 2.0 * g1) < FORM_TOL
            assert abs(f @ gp.m_matrix @ f - 4.0 * g2) < FORM_TOL


def test_form_matrices_are_symmetric_and_n_psd():
    for gamma in GAMMAS:
        gp = pair_matrices_k0(gamma, ("discrete", 2), 0)
        assert np.max(np.abs(gp.n_matrix - gp.n_matrix.T)) < 1e-14
        assert np.max(np.abs(gp.m_matrix - gp.m_matrix.T)) < 1e-14
        assert np.linalg.eigvalsh(gp.n_matrix).min() > -1e-12


@pytest.mark.parametrize("gamma", GAMMAS)
def test_starred_displays_match_explicit_entries(gamma):
    n_ref, m_ref = explicit_starred_k0(gamma)
    for horizon in (("discrete", 1), ("discrete", 5),
                    ("poisson", 1.0, 1e-10)):
        n_star, m_star = starred_pair_k0(gamma, horizon)
        assert np.max(np.abs(n_star - n_ref)) < DISPLAY_TOL
        assert np.max(np.abs(m_star - m_ref)) < DISPLAY_TOL


def test_starred_reference_row_vanishes():
    # the constant direction is annihilated after normalization
    n_star, m_star = starred_pair_k0(2.0, ("discrete", 1))
    assert np.max(np.abs(n_star[0])) < DISPLAY_TOL
    assert np.max(np.abs(n_star[:, 0])) < DISPLAY_TOL
    assert np.max(np.abs(m_star[0])) < DISPLAY_TOL


def test_starred_rejects_near_singular_kernel():
    # det of the 5-step kernel at gamma = 1.5 is theta^20 ~ 5e-9, still
    # fine; at 10 steps it crosses the documented determinant floor
    starred_pair_k0(1.5, ("discrete", 5))
    with pytest.raises(ValueError):
        starred_pair_k0(1.5, ("discrete", 10))


def test_similarity_conjugations():
    for gamma in GAMMAS:
        report = similarity_check_k0(gamma, ("discrete", 2),
                                     shifts=(0.0, 0.37, -1.2))
        for state, errs in report.items():
            assert errs["n"] < FORM_TOL
            assert errs["m"] < FORM_TOL


def test_extended_precision_kernel_matches_float_route():
    for gamma in GAMMAS:
        for horizon in HORIZONS:
            ld = np.asarray(_resolve_entries_ld(gamma, horizon),
                            dtype=np.float64)
            f64 = resolve_kernel_k0(gamma, horizon).entries
            assert np.max(np.abs(ld - f64)) < 1e-14


def test_decompose_certifies_tail():
    for t in (0.5, 1.0, 2.0):
        for eps in (1e-4, 1e-6):
            split = decompose(2.0, t, eps)
            assert split.certified
            assert split.n_tail_max <= 2.0 * eps
            assert split.m_tail_max <= 8.0 * eps


def test_gamma_of_f_closed_values():
    params = LatticeParams(9, 0.0, 2.0, seed=0)
    spins = np.ones((1, 9), dtype=np.int8)
    x1, x2 = 4, 5
    s1 = np.array([p[0] for p in STATE_PAIRS], dtype=np.float64)
    s2 = np.array([p[1] for p in STATE_PAIRS], dtype=np.float64)
    val_sum = gamma_of_f(s1 + s2, spins, x1, x2, params)[0]
    val_prod = gamma_of_f(s1 * s2, spins, x1, x2, params)[0]
    assert abs(val_sum - SUM_GAMMA_ALL_PLUS) < 1e-12
    assert abs(val_prod - PRODUCT_GAMMA_ALL_PLUS) < 1e-12
    th = step_autocorrelation(2.0)
    assert abs(val_prod - (1.0 - th * th)) < 1e-12


def test_quadratic_form_helpers():
    gp = pair_matrices_k0(2.0, ("discrete", 1), 0)
    f = np.array([0.3, -1.0, 0.7, 0.1])
    assert abs(gamma_from_matrix(f, gp.n_matrix)
               - 0.5 * f @ gp.n_matrix @ f) < 1e-15
    assert abs(gamma2_from_matrix(f, gp.m_matrix)
               - 0.25 * f @ gp.m_matrix @ f) < 1e-15


@given(st.floats(1.05, 5.0), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_n_matrix_stays_psd(gamma, n_steps):
    gp = pair_matrices_k0(gamma, ("discrete", n_steps), 0)
    assert np.linalg.eigvalsh(gp.n_matrix).min() > -1e-11
