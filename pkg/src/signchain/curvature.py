"""Curvature ratio of the pair dynamics from the normal-form spectra.

The normal forms N* and M* share an exactly null direction (the
constant function), so the curvature ratio at a state is

    rho_i = lambda_2(M*_i - eps I_i) / lambda_4(N*_i + eps I_i),

the smallest nonnull eigenvalue of the second form over the largest of
the first, with a spectral shift eps absorbing truncation and sampling
slack. The reported rho is the minimum over evaluation states (and, at
nonzero coupling, over an enumerated window of environments).

Eigenvalues come from a cyclic Jacobi sweep written out here: the
matrices are 3x3 cores after removing the null row and column, and a
dependency-free solver keeps the whole certificate self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elim
from .gamma import (
    explicit_starred_k0,
    masked_identity,
    normalization_transform,
    starred_pair_k0,
)
from .kernels import STATE_PAIRS, normal_cdf, poisson_weights
from .lattice import LatticeParams, exact_ring_size
from .mcgamma import estimate_pair_bundle

__all__ = [
    "symmetric_eigs",
    "psd_margin",
    "quadratic_lambda2_k0",
    "CurvatureK0Report",
    "rho_k0",
    "window_sites",
    "enumerate_window_configs",
    "RhoEstimate",
    "rho_sampled",
    "rho_ladder",
]

_SYM_GATE = 1e-9
_CORE_GATE = 1e-6
_DET_FLOOR = 1e-12


def symmetric_eigs(a, tol=None, max_sweeps=100):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Returns (values ascending, vectors as columns). Vector signs are
    fixed by making the first nonzero component positive. Refuses
    matrices that are not symmetric to within 1e-9 of their scale.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("square matrix required")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if float(np.max(np.abs(a - a.T))) > _SYM_GATE * scale:
        raise ValueError("matrix is not symmetric to working precision")
    if tol is None:
        tol = 1e-13 * scale
    w = 0.5 * (a + a.T)
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                off = max(off, abs(apq))
                if abs(apq) <= tol:
                    continue
                theta = (w[q, q] - w[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = w[:, p].copy()
                rq = w[:, q].copy()
                w[:, p] = c * rp - s * rq
                w[:, q] = s * rp + c * rq
                rp = w[p, :].copy()
                rq = w[q, :].copy()
                w[p, :] = c * rp - s * rq
                w[q, :] = s * rp + c * rq
                gp = v[:, p].copy()
                gq = v[:, q].copy()
                v[:, p] = c * gp - s * gq
                v[:, q] = s * gp + c * gq
        if off <= tol:
            break
    else:
        raise RuntimeError("Jacobi sweep did not converge")
    vals = np.diag(w).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    v = v[:, order]
    for j in range(n):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            v[:, j] = -col
    return vals, v


def psd_margin(a):
    """Smallest eigenvalue; nonnegative (to tolerance) means PSD."""
    vals, _ = symmetric_eigs(a)
    return float(vals[0])


def _core(a, state):
    """Drop the null row and column of a normal form.

    The removed row must already be numerically null: a nonzero row
    there means the conjugation or the mass structure is broken, which
    should fail loudly rather than produce a wrong spectrum.
    """
    a = np.asarray(a, dtype=np.float64)
    i = int(state)
    scale = max(1.0, float(np.max(np.abs(a))))
    resid = max(float(np.max(np.abs(a[i, :]))), float(np.max(np.abs(a[:, i]))))
    if resid > _CORE_GATE * scale:
        raise ValueError(
            f"normal form row {i} is not null (residual {resid:.3e}); "
            "the conjugating kernel does not match the matrix")
    keep = [j for j in range(4) if j != i]
    return a[np.ix_(keep, keep)]


def quadratic_lambda2_k0(gamma):
    """Closed-form smallest nonnull eigenvalue of M* at zero coupling.

    The 3x3 core splits into the antisymmetric direction and a 2x2
    block whose characteristic quadratic has coefficients polynomial in
    the flip probabilities; the smaller root is returned through the
    cancellation-free form c / q, q = (b + sqrt(b^2 - 4c)) / 2.
    """
    pp = float(normal_cdf(1.0 - gamma))
    pm = float(normal_cdf(gamma - 1.0))
    b = 8.0 * pp * pp * pm * pm + 2.0 * pm * pm + 2.0 * pm ** 4
    c = (8.0 * pp * pp * pm * pm * (2.0 * pm * pm + 2.0 * pm ** 4)
         - 8.0 * pp ** 4 * pm ** 4)
    disc = b * b - 4.0 * c
    if disc < 0:
        raise ValueError("gamma: quadratic has no real roots, expected gamma > 1")
    q = 0.5 * (b + np.sqrt(disc))
    return float(c / q)


@dataclass(frozen=True)
class CurvatureK0Report:
    """Exact zero-coupling curvature at one horizon."""

    gamma: float
    horizon: tuple
    rho: float
    ratios: np.ndarray           # per evaluation state
    lambda2: float
    lambda4: float
    lambda2_quadratic: float
    m_psd_margins: np.ndarray    # per state, full 4x4
    n_psd_margins: np.ndarray
    m_spectrum: np.ndarray       # at the all-plus state
    n_spectrum: np.ndarray


def rho_k0(gamma, horizon=("discrete", 1)):
    """Exact curvature ratio at zero coupling.

    Computes the normal forms at all four states, checks they give one
    common ratio (they are permutations of each other), and returns the
    spectral data. The ratio does not depend on the horizon: the
    conjugation cancels the kernel exactly when the coupling vanishes.
    """
    ratios = np.empty(4)
    m_margins = np.empty(4)
    n_margins = np.empty(4)
    lam2 = lam4 = None
    m_spec = n_spec = None
    for i in range(4):
        n_star, m_star = starred_pair_k0(gamma, horizon, i)
        m_vals, _ = symmetric_eigs(m_star)
        n_vals, _ = symmetric_eigs(n_star)
        m_margins[i] = m_vals[0]
        n_margins[i] = n_vals[0]
        core_m, _ = symmetric_eigs(_core(m_star, i))
        core_n, _ = symmetric_eigs(_core(n_star, i))
        ratios[i] = core_m[0] / core_n[-1]
        if i == 0:
            lam2 = float(core_m[0])
            lam4 = float(core_n[-1])
            m_spec = m_vals
            n_spec = n_vals
    spread = (np.max(ratios) - np.min(ratios)) / max(abs(np.min(ratios)), 1e-300)
    if spread > 1e-6:
        raise RuntimeError(
            f"state ratios disagree by {spread:.3e}; permutation symmetry "
            "is broken, which indicates an assembly bug")
    return CurvatureK0Report(
        float(gamma), tuple(horizon), float(np.min(ratios)), ratios,
        lam2, lam4, quadratic_lambda2_k0(gamma),
        m_margins, n_margins, m_spec, n_spec)


def window_sites(x1, x2, radius, n_sites):
    """Sites within `radius` of either tracked site, the pair excluded."""
    s = set()
    for x in (x1, x2):
        for r in range(-int(radius), int(radius) + 1):
            s.add((int(x) + r) % int(n_sites))
    s -= {int(x1) % int(n_sites), int(x2) % int(n_sites)}
    return sorted(s)


def enumerate_window_configs(n_sites, x1, x2, radius, fill=1):
    """All window assignments crossed with the four pair states.

    Returns (configs, groups): configs is (4 * 2^m, L) ordered so that
    cells 4g..4g+3 share window assignment g and run through the pair
    states in index order; groups lists the window sites. Spins outside
    the window hold the `fill` value.
    """
    sites = window_sites(x1, x2, radius, n_sites)
    m = len(sites)
    n_env = 1 << m
    configs = np.full((4 * n_env, n_sites), fill, dtype=np.int8)
    for g in range(n_env):
        for b, site in enumerate(sites):
            val = 1 if (g >> b) & 1 == 0 else -1
            configs[4 * g:4 * g + 4, site] = val
        for i, (s1, s2) in enumerate(STATE_PAIRS):
            configs[4 * g + i, x1] = s1
            configs[4 * g + i, x2] = s2
    return configs, sites


@dataclass(frozen=True)
class RhoEstimate:
    """Sampled curvature ratio, minimized over states and environments."""

    gamma: float
    coupling: float
    t: float
    eps_tail: float
    eps_shift: float
    level: int
    window_radius: int
    pair_distance: int
    samples: int
    rho: float
    stderr: float
    argmin_state: int
    argmin_env: int
    cell_ratios: np.ndarray
    rho_drops: np.ndarray     # leave-one-batch-out values
    rho_k0_reference: float


def _ratios_from_bundle(bundle, n_cells, eps_shift, drop=None):
    """Per-cell shifted spectral ratios for one batch subset."""
    n_means = bundle.n_means(drop)
    m_means = bundle.m_means(drop)
    bcols = bundle.bcol_means(drop)
    ratios = np.empty(n_cells)
    for g in range(n_cells // 4):
        bhat = np.stack([bcols[4 * g + l] for l in range(4)], axis=1)
        if abs(elim.det(bhat)) < _DET_FLOOR:
            raise ValueError("sampled kernel matrix is numerically singular")
        binv = elim.inv(bhat)
        for i in range(4):
            c = 4 * g + i
            x = normalization_transform(i) @ binv
            m_star = x @ m_means[c] @ x.T
            n_star = x @ n_means[c] @ x.T
            m_star = 0.5 * (m_star + m_star.T)
            n_star = 0.5 * (n_star + n_star.T)
            core_m, _ = symmetric_eigs(_core(m_star, i))
            core_n, _ = symmetric_eigs(_core(n_star, i))
            lam2 = core_m[0] - eps_shift
            lam4 = core_n[-1] + eps_shift
            if lam4 <= 0:
                raise ValueError("first-form normal core lost positivity")
            ratios[c] = lam2 / lam4
    return ratios


def _effective_eps(t, eps_tail):
    # the tail's reach into the normal form decays like exp(-2 t) on
    # top of its mass, so the mass budget can grow by the inverse
    return float(min(eps_tail * np.exp(2.0 * t), 0.1))


def rho_sampled(gamma, coupling, t, pair_distance=1, window_radius=2,
                eps_tail=1e-6, eps_shift=None, samples=20_000, seed=0,
                n_batches=32, force=False):
    """Sampled curvature ratio at general coupling.

    Minimizes the shifted spectral ratio over the four pair states and
    every spin assignment on a window around the pair (spins beyond
    the window frozen at +1; at zero coupling they are immaterial).
    The error bar is a leave-one-batch-out jackknife of the whole
    pipeline, minimum included. Ties in the minimizing cell resolve to
    the lowest cell index.
    """
    if eps_shift is None:
        eps_shift = min(1e-3, quadratic_lambda2_k0(gamma) / 10.0)
    eps_used = _effective_eps(t, eps_tail)
    level = poisson_weights(t, eps_used).level
    x1 = window_radius
    x2 = x1 + int(pair_distance)
    n_sites = max(exact_ring_size(level + 2, pair_distance),
                  x2 + window_radius + 2)
    params = LatticeParams(n_sites, float(coupling), float(gamma), int(seed))
    configs, sites = enumerate_window_configs(n_sites, x1, x2, window_radius)
    bundle = estimate_pair_bundle(params, configs, x1, x2, t, eps_used,
                                  samples, seed=seed, n_batches=n_batches,
                                  force=force)
    n_cells = configs.shape[0]
    ratios = _ratios_from_bundle(bundle, n_cells, eps_shift)
    c_min = int(np.argmin(ratios))
    drops = np.array([
        np.min(_ratios_from_bundle(bundle, n_cells, eps_shift, drop=b))
        for b in range(n_batches)
    ])
    nb = n_batches
    stderr = float(np.sqrt((nb - 1) / nb * np.sum((drops - drops.mean()) ** 2)))
    ref = rho_k0(gamma, ("poisson", float(t), eps_used)).rho
    return RhoEstimate(
        float(gamma), float(coupling), float(t), float(eps_tail),
        float(eps_shift), level, int(window_radius), int(pair_distance),
        int(samples), float(np.min(ratios)), stderr,
        c_min % 4, c_min // 4, ratios, drops, ref)


def rho_ladder(gamma, t, couplings, pair_distance=1, window_radius=2,
               eps_tail=1e-6, eps_shift=None, samples=20_000, seed=0,
               n_batches=32):
    """Sampled rho along a list of couplings with shared noise.

    The noise keys never involve the coupling, so every rung of the
    ladder sees identical randomness and differences between rungs are
    far better resolved than the individual values. Returns a dict with
    the per-rung estimates and the matrix of leave-one-batch-out values
    for joint error propagation.
    """
    estimates = [
        rho_sampled(gamma, k, t, pair_distance=pair_distance,
                    window_radius=window_radius, eps_tail=eps_tail,
                    eps_shift=eps_shift, samples=samples, seed=seed,
                    n_batches=n_batches)
        for k in couplings
    ]
    drops = np.stack([e.rho_drops for e in estimates], axis=1)  # (nb, nK)
    return {
        "couplings": [float(k) for k in couplings],
        "estimates": estimates,
        "rho": np.array([e.rho for e in estimates]),
        "stderr": np.array([e.stderr for e in estimates]),
        "rho_drops": drops,
    }
