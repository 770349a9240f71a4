"""Synchronous sign dynamics on a periodic ring of +-1 spins.

One update step draws an independent standard normal at every site and
replaces every spin simultaneously by

    sign( K * (left + right) + (1 - gamma) * self + noise ),

with sign(0) counted as +1. Running the same step a Poisson(t) number of
times gives the continuized chain. All noise comes from a counter-based
generator, so the variate used at (seed, stream, replica, step, site) is
a pure function of that tuple: trajectories are reproducible regardless
of batch size, worker count, or evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

__all__ = [
    "LatticeParams",
    "SpinConfiguration",
    "NoiseStream",
    "normal_cdf",
    "threshold_table",
    "local_field",
    "step",
    "run_discrete",
    "run_poissonized",
    "evolve_batch",
    "poisson_step_counts",
    "exact_ring_size",
    "max_exact_steps",
    "DYNAMICS_STREAM",
    "STEP_COUNT_STREAM",
]

_SQRT2 = np.sqrt(2.0)

# Stream tags. Modules that need private noise pick tags >= 8.
DYNAMICS_STREAM = 0
STEP_COUNT_STREAM = 1

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_SALT = np.uint64(0xD1B54A32D192ED03)


def normal_cdf(x):
    """Standard normal CDF, Phi(x) = erfc(-x / sqrt(2)) / 2."""
    return 0.5 * erfc(-np.asarray(x, dtype=np.float64) / _SQRT2)


def _mix(h):
    # splitmix64 finalizer; uint64 wrap-around is intended
    with np.errstate(over="ignore"):
        h = h ^ (h >> np.uint64(30))
        h = h * _MIX1
        h = h ^ (h >> np.uint64(27))
        h = h * _MIX2
        h = h ^ (h >> np.uint64(31))
    return h


def _absorb(h, x):
    # fold one counter component into the key and re-mix
    x = np.asarray(x).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _mix(h ^ (x * _GOLD + _SALT))


@dataclass(frozen=True)
class LatticeParams:
    """Ring size, coupling, drift parameter, and base seed."""

    n_sites: int
    coupling: float
    gamma: float
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.n_sites, (int, np.integer)) and self.n_sites >= 3):
            raise ValueError("n_sites: integer >= 3 required")
        if not np.isfinite(self.coupling):
            raise ValueError("coupling: finite value required")
        if not (np.isfinite(self.gamma) and self.gamma > 1.0):
            raise ValueError("gamma: finite value > 1 required")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed: integer in [0, 2^64) required")


@dataclass(frozen=True)
class SpinConfiguration:
    """A +-1 spin vector. Use the factories; entries are validated."""

    spins: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spins, dtype=np.int8)
        if s.ndim != 1 or s.size < 3:
            raise ValueError("spins: 1-d array of length >= 3 required")
        if not np.all(np.abs(s) == 1):
            raise ValueError("spins: entries must be +1 or -1")
        object.__setattr__(self, "spins", s)

    @classmethod
    def all_plus(cls, n):
        return cls(np.ones(n, dtype=np.int8))

    @classmethod
    def all_minus(cls, n):
        return cls(-np.ones(n, dtype=np.int8))

    @classmethod
    def from_values(cls, values):
        return cls(np.asarray(values, dtype=np.int8))

    @classmethod
    def random(cls, n, seed):
        u = NoiseStream(seed).uniform(DYNAMICS_STREAM, 0, 0, np.arange(n))
        return cls(np.where(u < 0.5, -1, 1).astype(np.int8))

    def with_pair(self, x1, x2, s1, s2):
        """Copy with the spins at x1, x2 replaced."""
        out = self.spins.copy()
        out[x1] = s1
        out[x2] = s2
        return SpinConfiguration(out)

    def pair(self, x1, x2):
        return int(self.spins[x1]), int(self.spins[x2])


class NoiseStream:
    """Counter-addressed noise source.

    `uniform(stream, replica, step, site)` broadcasts its arguments and
    returns variates in (0, 1); `normal` maps them through the inverse
    CDF. The dynamics never calls `normal`: it compares the uniform
    against a precomputed threshold, which produces the same trajectory
    (sign(h + ndtri(u)) >= 0 iff u >= Phi(-h)) without the ndtri cost.
    """

    def __init__(self, seed):
        if not (0 <= int(seed) < 2 ** 64):
            raise ValueError("seed: integer in [0, 2^64) required")
        self.seed = int(seed)
        self._base = _mix(np.uint64(self.seed) + _SALT)

    def stream_key(self, stream, replica):
        """Per-(stream, replica) key; hoist this out of step loops."""
        return _absorb(_absorb(self._base, stream), replica)

    @staticmethod
    def raw_from_key(key, step, site):
        return _absorb(_absorb(key, step), site)

    def uniform(self, stream, replica, step, site):
        h = self.raw_from_key(self.stream_key(stream, replica), step, site)
        return _to_unit(h)

    def normal(self, site, step, replica=0, stream=DYNAMICS_STREAM):
        return ndtri(self.uniform(stream, replica, step, site))


def _to_unit(h):
    # 53-bit mantissa, offset keeps 0 and 1 unreachable
    return (h >> np.uint64(11)) * 2.0 ** -53 + 2.0 ** -54


def threshold_table(params):
    """Phi(-h) on the six local fields h(s, left+right).

    Row index (1 - s) // 2, column index (left + right) // 2 + 1. A step
    flips the spin to +1 exactly when its uniform is >= the table entry.
    """
    s = np.array([1.0, -1.0])
    nn = np.array([-2.0, 0.0, 2.0])
    h = params.coupling * nn[None, :] + (1.0 - params.gamma) * s[:, None]
    return normal_cdf(-h)


def local_field(spins, params):
    """K (left + right) + (1 - gamma) self, vectorized over sites."""
    s = np.asarray(spins, dtype=np.float64)
    nn = np.roll(s, 1, axis=-1) + np.roll(s, -1, axis=-1)
    return params.coupling * nn + (1.0 - params.gamma) * s


def _advance(spins, table_flat, key, step_index, site_idx):
    # one synchronous update of an int8 array of shape (L,) or (B, L);
    # a batch carries one key per row, combined against every site
    hs = _absorb(key, step_index)
    if spins.ndim == 2:
        h = _absorb(np.asarray(hs)[:, None], site_idx[None, :])
    else:
        h = _absorb(hs, site_idx)
    u = _to_unit(h)
    left = np.roll(spins, 1, axis=-1)
    right = np.roll(spins, -1, axis=-1)
    code = ((1 - spins) >> 1) * 3 + (((left + right) >> 1) + 1)
    thr = table_flat[code]
    return np.where(u >= thr, 1, -1).astype(np.int8)


def step(config, params, noise=None, step_index=0, replica=0,
         stream=DYNAMICS_STREAM):
    """One synchronous update of a SpinConfiguration."""
    if noise is None:
        noise = NoiseStream(params.seed)
    table = threshold_table(params).ravel()
    key = noise.stream_key(stream, replica)
    site_idx = np.arange(config.spins.size, dtype=np.uint64)
    out = _advance(config.spins, table, key, step_index, site_idx)
    return SpinConfiguration(out)


def run_discrete(config, params, n_steps, noise=None, replica=0,
                 stream=DYNAMICS_STREAM, record=False):
    """Run `n_steps` synchronous updates; optionally keep the trajectory.

    Returns the final SpinConfiguration, or (final, trajectory) with
    trajectory of shape (n_steps + 1, L) when `record` is set.
    """
    if n_steps < 0:
        raise ValueError("n_steps: non-negative integer required")
    if noise is None:
        noise = NoiseStream(params.seed)
    table = threshold_table(params).ravel()
    key = noise.stream_key(stream, replica)
    site_idx = np.arange(config.spins.size, dtype=np.uint64)
    s = config.spins
    traj = [s.copy()] if record else None
    for m in range(int(n_steps)):
        s = _advance(s, table, key, m, site_idx)
        if record:
            traj.append(s.copy())
    final = SpinConfiguration(s)
    if record:
        return final, np.stack(traj)
    return final


def poisson_step_counts(t, noise, replica, stream=STEP_COUNT_STREAM,
                        cap=None):
    """Step counts N ~ Poisson(t), one per replica, by CDF inversion.

    One uniform per replica; the count is the generalized inverse of the
    Poisson CDF at that uniform, truncated at `cap` when given.
    """
    if t < 0:
        raise ValueError("t: non-negative value required")
    u = np.atleast_1d(noise.uniform(stream, replica, 0, 0))
    if t == 0:
        counts = np.zeros(u.shape, dtype=np.int64)
    else:
        kmax = int(t + 40.0 * np.sqrt(t) + 40.0)
        if cap is not None:
            kmax = min(kmax, int(cap))
        w = np.empty(kmax + 1)
        w[0] = np.exp(-t)
        for k in range(kmax):
            w[k + 1] = w[k] * t / (k + 1)
        cdf = np.cumsum(w)
        counts = np.searchsorted(cdf, u, side="left").astype(np.int64)
        counts = np.minimum(counts, kmax)
    if np.isscalar(replica) or np.asarray(replica).ndim == 0:
        return int(counts[0])
    return counts


def run_poissonized(config, params, t, noise=None, replica=0,
                    stream=DYNAMICS_STREAM,
                    count_stream=STEP_COUNT_STREAM):
    """Continuized run to time t: Poisson(t) steps off a dedicated stream.

    Returns (final SpinConfiguration, step count used).
    """
    if noise is None:
        noise = NoiseStream(params.seed)
    n = poisson_step_counts(t, noise, replica, stream=count_stream)
    final = run_discrete(config, params, n, noise=noise, replica=replica,
                         stream=stream)
    return final, n


def evolve_batch(spins, params, noise, stream, replica_ids, steps,
                 table=None):
    """Advance each row of `spins` (B, L) by its own step count.

    Rows are sorted by step count so every update touches a contiguous
    tail of the batch and no noise is drawn for finished rows. Noise is
    keyed by the true replica id, so the output is identical however the
    replicas are grouped into batches.
    """
    spins = np.asarray(spins, dtype=np.int8)
    b, n_sites = spins.shape
    replica_ids = np.broadcast_to(np.asarray(replica_ids, dtype=np.uint64), (b,))
    steps = np.broadcast_to(np.asarray(steps, dtype=np.int64), (b,))
    if table is None:
        table = threshold_table(params).ravel()
    order = np.argsort(steps, kind="stable")
    s = spins[order].copy()
    st = steps[order]
    keys = noise.stream_key(stream, replica_ids[order])
    site_idx = np.arange(n_sites, dtype=np.uint64)
    n_max = int(st[-1]) if b else 0
    for m in range(n_max):
        lo = int(np.searchsorted(st, m, side="right"))
        s[lo:] = _advance(s[lo:], table, keys[lo:], m, site_idx)
    out = np.empty_like(s)
    out[order] = s
    return out


def exact_ring_size(n_steps, pair_distance):
    """Smallest ring on which n steps match the infinite lattice.

    Information moves one site per step from each side, so a ring of
    size 2 n + d + 1 leaves the joint law of two sites at distance d
    untouched: the wrap-around sites are only ever read at step 0.
    """
    return 2 * int(n_steps) + int(pair_distance) + 1


def max_exact_steps(n_sites, pair_distance):
    """Largest step count the ring reproduces exactly for a pair at distance d."""
    return (int(n_sites) - int(pair_distance) - 1) // 2
