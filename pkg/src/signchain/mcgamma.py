"""Sampled square-field matrices at general coupling.

The exact assembly in `gamma` needs the restricted kernel in closed
form, which exists only at zero coupling. Here the same matrices are
estimated by simulation for any coupling, built so that the estimator
is unbiased for the truncated-horizon matrices and keeps their mass
structure to rounding.

The building block is a truncation-weighted walk: starting from a full
configuration, run the dynamics for `level` steps and accumulate
weight w_k on the restricted state seen at step k, with w the Poisson
weights of the horizon. The accumulated 4-vector is an unbiased
estimate of the truncated kernel column out of the start, and its
total mass is the constant sum(w) for every replica, so differences of
walks from a common anchor annihilate the all-ones vector.

Per replica the estimator runs three fresh one-step transitions
(eta -> w, w -> z, eta -> w') and eight independent walks, two from
each of eta, w, z, w'. With walk pairs (g1, g2), (e1, e2), (h1, h2),
(e1', e2'):

    N-hat = sym[(e1 - g1)(e2 - g2)']
    M-hat = sym[u1 u2'] - sym[(e1 - e1')(e2 - e2')'],  u = h - 2 e + g.

Independence of the paired walks makes each product unbiased: the
first term averages to the second-difference moment, the subtracted
term to twice the one-step covariance of the kernel column. A ninth
walk per replica, on its own noise stream, estimates the kernel column
itself for the conjugating matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gamma import GammaPair
from .kernels import poisson_weights, state_index
from .lattice import NoiseStream, max_exact_steps, threshold_table, _advance

__all__ = [
    "OUTER_STREAMS",
    "WALK_STREAMS",
    "BCOL_STREAM",
    "McPairBundle",
    "estimate_pair_bundle",
    "estimate_state_matrices",
]

OUTER_STREAMS = (8, 9, 10)          # eta->w, w->z, eta->w'
WALK_STREAMS = (16, 17, 18, 19, 20, 21, 22, 23)
BCOL_STREAM = 24

_ROWS_PER_CHUNK = 1 << 16


@dataclass(frozen=True)
class McPairBundle:
    """Per-cell, per-batch accumulation of the sampled matrices.

    Sums, not means: entry [c, b] holds the sum over the replicas of
    batch b for cell c, and `batch_counts[b]` the replica count, so any
    subset of batches can be averaged after the fact (jackknife).
    """

    t: float
    eps: float
    level: int
    samples: int
    x1: int
    x2: int
    n_batch: np.ndarray      # (C, nb, 4, 4)
    m_batch: np.ndarray      # (C, nb, 4, 4)
    bcol_batch: np.ndarray   # (C, nb, 4)
    batch_counts: np.ndarray  # (nb,)

    @property
    def n_cells(self):
        return self.n_batch.shape[0]

    @property
    def n_batches(self):
        return self.n_batch.shape[1]

    def _mean(self, arr, drop=None):
        keep = np.ones(self.n_batches, dtype=bool)
        if drop is not None:
            keep[int(drop)] = False
        tot = float(self.batch_counts[keep].sum())
        return arr[:, keep].sum(axis=1) / tot

    def n_means(self, drop=None):
        return self._mean(self.n_batch, drop)

    def m_means(self, drop=None):
        return self._mean(self.m_batch, drop)

    def bcol_means(self, drop=None):
        return self._mean(self.bcol_batch, drop)


def _walk_column(spins, table, noise, stream, rid, weights, x1, x2):
    """Truncation-weighted restricted-state walk; returns (R, 4) mass W."""
    r = spins.shape[0]
    acc = np.zeros((r, 4))
    rows = np.arange(r)
    idx = state_index(spins[:, x1], spins[:, x2])
    acc[rows, idx] = weights[0]
    if len(weights) > 1:
        keys = noise.stream_key(stream, rid)
        site_idx = np.arange(spins.shape[1], dtype=np.uint64)
        s = spins
        for k in range(1, len(weights)):
            s = _advance(s, table, keys, k - 1, site_idx)
            idx = state_index(s[:, x1], s[:, x2])
            acc[rows, idx] += weights[k]
    return acc


def _one_step(spins, table, noise, stream, rid):
    keys = noise.stream_key(stream, rid)
    site_idx = np.arange(spins.shape[1], dtype=np.uint64)
    return _advance(spins, table, keys, 0, site_idx)


def _sym_outer(a, b, n_cells):
    # a, b: (C * r, 4) -> (C, 4, 4) symmetrized per-cell product sums
    a3 = a.reshape(n_cells, -1, 4)
    b3 = b.reshape(n_cells, -1, 4)
    p = np.einsum("cri,crj->cij", a3, b3)
    return 0.5 * (p + np.transpose(p, (0, 2, 1)))


def estimate_pair_bundle(params, configs, x1, x2, t, eps, samples,
                         seed=None, n_batches=32, force=False):
    """Sample the square-field matrices at every start configuration.

    `configs` is (C, L); all cells share replica noise (common random
    numbers), so estimates at different cells, or at different coupling
    with the same seed, are positively coupled and their differences
    have much smaller variance than either term.

    The walk depth is the certified Poisson level for (t, eps); the
    ring must keep the pair's light cone exact for level + 2 steps
    (two outer transitions precede the deepest walks).
    """
    configs = np.asarray(configs, dtype=np.int8)
    if configs.ndim != 2 or configs.shape[1] != params.n_sites:
        raise ValueError("configs: (C, n_sites) array required")
    n_cells = configs.shape[0]
    pw = poisson_weights(t, eps)
    w = pw.weights
    d = abs(int(x2) - int(x1)) % params.n_sites
    d = min(d, params.n_sites - d)
    if pw.level + 2 > max_exact_steps(params.n_sites, d) and not force:
        raise ValueError(
            f"estimate_pair_bundle: ring of {params.n_sites} sites cannot "
            f"hold the light cone of {pw.level + 2} steps at pair distance "
            f"{d}; enlarge the ring or pass force=True")

    noise = NoiseStream(params.seed if seed is None else seed)
    table = threshold_table(params).ravel()
    n_batch = np.zeros((n_cells, n_batches, 4, 4))
    m_batch = np.zeros((n_cells, n_batches, 4, 4))
    bcol_batch = np.zeros((n_cells, n_batches, 4))
    edges = np.linspace(0, int(samples), n_batches + 1).astype(np.int64)
    batch_counts = np.diff(edges)

    max_rows = max(_ROWS_PER_CHUNK // max(n_cells, 1), 1)
    for beta in range(n_batches):
        done = int(edges[beta])
        while done < edges[beta + 1]:
            b = int(min(max_rows, edges[beta + 1] - done))
            rid = np.arange(done, done + b, dtype=np.uint64)
            rid_rows = np.tile(rid, n_cells)
            eta = np.repeat(configs, b, axis=0)

            om = _one_step(eta, table, noise, OUTER_STREAMS[0], rid_rows)
            zz = _one_step(om, table, noise, OUTER_STREAMS[1], rid_rows)
            om2 = _one_step(eta, table, noise, OUTER_STREAMS[2], rid_rows)

            def walk(start, stream):
                return _walk_column(start, table, noise, stream,
                                    rid_rows, w, x1, x2)

            g1 = walk(eta, WALK_STREAMS[0])
            g2 = walk(eta, WALK_STREAMS[1])
            e1 = walk(om, WALK_STREAMS[2])
            e2 = walk(om, WALK_STREAMS[3])
            h1 = walk(zz, WALK_STREAMS[4])
            h2 = walk(zz, WALK_STREAMS[5])
            f1 = walk(om2, WALK_STREAMS[6])
            f2 = walk(om2, WALK_STREAMS[7])
            bc = walk(eta, BCOL_STREAM)

            n_batch[:, beta] += _sym_outer(e1 - g1, e2 - g2, n_cells)
            u1 = h1 - 2.0 * e1 + g1
            u2 = h2 - 2.0 * e2 + g2
            m_batch[:, beta] += (_sym_outer(u1, u2, n_cells)
                                 - _sym_outer(e1 - f1, e2 - f2, n_cells))
            bcol_batch[:, beta] += bc.reshape(n_cells, b, 4).sum(axis=1)
            done += b

    return McPairBundle(float(t), float(eps), pw.level, int(samples),
                        int(x1), int(x2), n_batch, m_batch, bcol_batch,
                        batch_counts)


def _batch_stderr(batch_sums, counts):
    # standard error of the overall mean from per-batch means
    means = batch_sums / counts.reshape(-1, *([1] * (batch_sums.ndim - 1)))
    nb = means.shape[0]
    center = means.mean(axis=0)
    var = np.sum((means - center) ** 2, axis=0) / (nb - 1)
    return np.sqrt(var / nb)


def estimate_state_matrices(params, spins, x1, x2, t, eps, samples,
                            seed=None, n_batches=32, force=False):
    """Sampled GammaPair at one full configuration, with error bars."""
    spins = np.asarray(spins, dtype=np.int8)
    bundle = estimate_pair_bundle(params, spins[None, :], x1, x2, t, eps,
                                  samples, seed=seed, n_batches=n_batches,
                                  force=force)
    n_mat = bundle.n_means()[0]
    m_mat = bundle.m_means()[0]
    n_err = _batch_stderr(bundle.n_batch[0], bundle.batch_counts)
    m_err = _batch_stderr(bundle.m_batch[0], bundle.batch_counts)
    state = int(state_index(int(spins[x1]), int(spins[x2])))
    return GammaPair(state, params.gamma, params.coupling,
                     ("poisson", float(t), float(eps)), n_mat, m_mat,
                     "monte-carlo", samples=int(samples),
                     n_stderr=n_err, m_stderr=m_err)
