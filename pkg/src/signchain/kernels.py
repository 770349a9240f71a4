"""Transition kernels of the sign dynamics restricted to a site pair.

At zero coupling the sites decouple, the single-site chain is a two
state Markov chain with autocorrelation theta = 2 Phi(1 - gamma) - 1,
and the pair kernel over n steps is the tensor square of the single
site matrix. The continuized kernel is the Poisson(t) mixture of the
discrete ones; a truncated mixture is sub-stochastic, with the mass
deficit equal to the Poisson tail. For general coupling the kernels
are estimated by simulation on a ring large enough that the light
cones of the tracked pair never wrap.

Restricted states are indexed 0..3 as (+,+), (-,+), (+,-), (-,-) read
as (spin at x1, spin at x2). Kernel matrices are column-stochastic:
column j is the distribution after starting from state j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .lattice import (
    DYNAMICS_STREAM,
    STEP_COUNT_STREAM,
    LatticeParams,
    NoiseStream,
    evolve_batch,
    max_exact_steps,
    normal_cdf,
    poisson_step_counts,
)

__all__ = [
    "STATE_PAIRS",
    "STATE_LABELS",
    "state_index",
    "state_pair",
    "step_autocorrelation",
    "SiteMarginals",
    "site_marginals_k0",
    "KernelMatrix",
    "two_point_kernel_k0",
    "PoissonWeights",
    "poisson_weights",
    "poisson_quantile",
    "poissonized_kernel_k0",
    "kernel_det_report",
    "pair_step_distribution",
    "mc_site_marginals",
    "mc_two_point_kernel",
    "mc_poissonized_two_point_kernel",
    "kernel_to_json",
    "kernel_from_json",
]

STATE_PAIRS = ((1, 1), (-1, 1), (1, -1), (-1, -1))
STATE_LABELS = ("++", "-+", "+-", "--")

_MC_CHUNK = 1 << 17


def state_index(s1, s2):
    """Index of the restricted state (s1, s2); vectorized."""
    s1 = np.asarray(s1)
    s2 = np.asarray(s2)
    idx = ((1 - s1) >> 1) + 2 * ((1 - s2) >> 1)
    return idx if idx.ndim else int(idx)

def state_pair(i):
    return STATE_PAIRS[int(i)]


def step_autocorrelation(gamma):
    """E[new spin * old spin] over one zero-coupling step.

    Equals 2 Phi(1 - gamma) - 1; negative for gamma > 1, so marginals
    relax with alternating sign.
    """
    return float(2.0 * normal_cdf(1.0 - gamma) - 1.0)


@dataclass(frozen=True)
class SiteMarginals:
    """Single-site n-step transition probabilities at zero coupling."""

    n_steps: int
    gamma: float
    stay: float
    switch: float

    def __post_init__(self):
        if abs(self.stay + self.switch - 1.0) > 1e-12:
            raise ValueError("stay + switch must equal 1")
        if not (-1e-15 <= self.stay <= 1.0 + 1e-15):
            raise ValueError("stay: probability required")

    @property
    def matrix(self):
        """2x2 column-stochastic matrix on sign states (+1, -1)."""
        return np.array([[self.stay, self.switch],
                         [self.switch, self.stay]])


def site_marginals_k0(n_steps, gamma):
    """Closed-form single-site marginals after n zero-coupling steps.

    The sign chain has eigenvalues 1 and theta, so the stay probability
    is (1 + theta^n) / 2 regardless of the starting sign.
    """
    if n_steps < 0:
        raise ValueError("n_steps: non-negative integer required")
    th = step_autocorrelation(gamma)
    stay = 0.5 * (1.0 + th ** int(n_steps))
    return SiteMarginals(int(n_steps), float(gamma), stay, 1.0 - stay)


@dataclass(frozen=True)
class KernelMatrix:
    """4x4 restricted kernel with provenance metadata.

    `entries[i, j]` is the probability (or truncated-mixture weight) of
    ending in state i from state j. Closed-form discrete kernels are
    column-stochastic; truncated Poisson mixtures fall short of 1 by
    the tail mass; Monte Carlo kernels carry per-entry standard errors.
    """

    entries: np.ndarray
    gamma: float
    coupling: float
    horizon: tuple
    source: str
    samples: int | None = None
    stderr: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.shape != (4, 4):
            raise ValueError("entries: 4x4 matrix required")
        if np.any(e < -1e-12) or np.any(e > 1.0 + 1e-12):
            raise ValueError("entries: probabilities required")
        if np.any(e.sum(axis=0) > 1.0 + 1e-9):
            raise ValueError("entries: column mass exceeds 1")
        object.__setattr__(self, "entries", e)

    def column(self, j):
        return self.entries[:, int(j)].copy()

    @property
    def column_mass(self):
        return self.entries.sum(axis=0)


def two_point_kernel_k0(n_steps, gamma):
    """Exact n-step pair kernel at zero coupling (tensor square)."""
    t1 = site_marginals_k0(n_steps, gamma).matrix
    return KernelMatrix(np.kron(t1, t1), float(gamma), 0.0,
                        ("discrete", int(n_steps)), "closed-form")


@dataclass(frozen=True)
class PoissonWeights:
    """Truncated Poisson(t) weights with a certified tail bound."""

    t: float
    eps: float
    level: int
    weights: np.ndarray
    tail: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.level + 1,):
            raise ValueError("weights: length level + 1 required")
        if self.tail > self.eps * (1 + 1e-12):
            raise ValueError("tail exceeds the requested bound")
        if abs(w.sum() + self.tail - 1.0) > 1e-12:
            raise ValueError("weights + tail must sum to 1")
        object.__setattr__(self, "weights", w)


def _poisson_pmf_upto(t, level):
    w = np.empty(level + 1)
    w[0] = np.exp(-t)
    for k in range(level):
        w[k + 1] = w[k] * t / (k + 1)
    return w


def poisson_weights(t, eps):
    """Smallest truncation level with Poisson tail mass <= eps.

    The tail is evaluated through the regularized incomplete gamma
    function rather than the summed weights, so the certificate does
    not inherit the accumulation error.
    """
    if not (t >= 0 and np.isfinite(t)):
        raise ValueError("t: non-negative finite value required")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps: value in (0, 1) required")
    if t == 0:
        return PoissonWeights(0.0, float(eps), 0, np.ones(1), 0.0)
    level = 0
    # P(N <= n) = gammaincc(n + 1, t)
    while 1.0 - gammaincc(level + 1, t) > eps:
        level += 1
        if level > 10_000_000:
            raise RuntimeError("truncation level search did not converge")
    tail = float(1.0 - gammaincc(level + 1, t))
    return PoissonWeights(float(t), float(eps), level,
                          _poisson_pmf_upto(t, level), tail)


def poisson_quantile(t, q):
    """Smallest n with P(Poisson(t) <= n) >= q."""
    if t == 0:
        return 0
    n = 0
    while gammaincc(n + 1, t) < q:
        n += 1
        if n > 10_000_000:
            raise RuntimeError("quantile search did not converge")
    return n


def poissonized_kernel_k0(t, gamma, eps=None):
    """Poisson(t) mixture of the zero-coupling pair kernels.

    With `eps` given the mixture is truncated at the certified level
    and is sub-stochastic by exactly the tail mass. Without `eps` the
    full mixture is returned in closed form: the tensor-square kernels
    share one eigenbasis, so mixing only averages theta^n and theta^2n,
    which have exponential closed forms.
    """
    th = step_autocorrelation(gamma)
    if eps is None:
        m1 = np.exp(-t * (1.0 - th))
        m2 = np.exp(-t * (1.0 - th * th))
        ones = np.ones((2, 2))
        rad = np.array([[1.0, -1.0], [-1.0, 1.0]])
        e = 0.25 * (np.kron(ones, ones)
                    + m1 * (np.kron(ones, rad) + np.kron(rad, ones))
                    + m2 * np.kron(rad, rad))
        return KernelMatrix(e, float(gamma), 0.0, ("poisson", float(t), None),
                            "closed-form")
    pw = poisson_weights(t, eps)
    e = np.zeros((4, 4))
    for k, w in enumerate(pw.weights):
        e += w * two_point_kernel_k0(k, gamma).entries
    return KernelMatrix(e, float(gamma), 0.0,
                        ("poisson", float(t), float(eps)), "closed-form")


@dataclass(frozen=True)
class KernelDetReport:
    """Determinant of a truncated mixture kernel, two ways."""

    t: float
    gamma: float
    eps: float
    level: int
    det: float
    det_factored: float
    rel_err: float


def kernel_det_report(t, gamma, eps):
    """Determinant of the truncated Poisson mixture kernel.

    Cross-checks elimination against the eigenbasis factorization
    (sum w_k)(sum w_k theta^k)^2 (sum w_k theta^2k). The mixture is
    ill-conditioned for large t (the theta^2k average is tiny), so the
    elimination runs in extended precision; float64 would lose the
    1e-10 agreement already around t = 5.
    """
    from . import elim

    pw = poisson_weights(t, eps)
    th = np.longdouble(step_autocorrelation(gamma))
    w = pw.weights.astype(np.longdouble)
    k = np.arange(pw.level + 1, dtype=np.longdouble)
    thk = th ** k
    stay = (1.0 + thk) / 2.0
    switch = (1.0 - thk) / 2.0
    e = np.zeros((4, 4), dtype=np.longdouble)
    for i in range(pw.level + 1):
        t1 = np.array([[stay[i], switch[i]], [switch[i], stay[i]]],
                      dtype=np.longdouble)
        e += w[i] * np.kron(t1, t1)
    d = float(elim.det(e))
    m0 = float(np.sum(w))
    m1 = float(np.sum(w * thk))
    m2 = float(np.sum(w * thk * thk))
    factored = m0 * m1 * m1 * m2
    rel = abs(d - factored) / max(abs(factored), np.finfo(float).tiny)
    return KernelDetReport(float(t), float(gamma), float(eps), pw.level,
                           d, factored, rel)


def pair_step_distribution(spins, x1, x2, params):
    """One-step law of the pair (x1, x2) given the full configuration.

    Over a single synchronous update the two sites are conditionally
    independent, so the law is the product of the site flip
    probabilities at the current local fields. Valid for any coupling.
    Vectorized: `spins` may be (L,) or (B, L); returns (4,) or (B, 4).
    """
    s = np.asarray(spins, dtype=np.int8)
    one_d = s.ndim == 1
    s2d = s[None, :] if one_d else s
    out = np.empty((s2d.shape[0], 4))
    n = s2d.shape[1]
    p_plus = np.empty((s2d.shape[0], 2))
    for col, x in enumerate((x1, x2)):
        left = s2d[:, (x - 1) % n].astype(np.float64)
        right = s2d[:, (x + 1) % n].astype(np.float64)
        h = params.coupling * (left + right) \
            + (1.0 - params.gamma) * s2d[:, x]
        p_plus[:, col] = normal_cdf(h)
    for i, (s1, s2) in enumerate(STATE_PAIRS):
        q1 = p_plus[:, 0] if s1 > 0 else 1.0 - p_plus[:, 0]
        q2 = p_plus[:, 1] if s2 > 0 else 1.0 - p_plus[:, 1]
        out[:, i] = q1 * q2
    return out[0] if one_d else out


def _require_light_cone(params, pair_distance, n_needed, force, what):
    limit = max_exact_steps(params.n_sites, pair_distance)
    if n_needed > limit and not force:
        raise ValueError(
            f"{what}: ring of {params.n_sites} sites only reproduces the "
            f"infinite lattice for {limit} steps at pair distance "
            f"{pair_distance}, but {n_needed} are needed; enlarge the ring "
            f"or pass force=True")


def _ring_distance(x1, x2, n_sites):
    d = abs(int(x2) - int(x1)) % n_sites
    return min(d, n_sites - d)


def _mc_pair_counts(params, x1, x2, n_or_t, samples, seed, poissonized,
                    fill):
    noise = NoiseStream(params.seed if seed is None else seed)
    counts = np.zeros((4, 4), dtype=np.int64)
    for j, (s1, s2) in enumerate(STATE_PAIRS):
        base = np.full(params.n_sites, fill, dtype=np.int8)
        base[x1] = s1
        base[x2] = s2
        done = 0
        while done < samples:
            b = min(_MC_CHUNK, samples - done)
            rid = (np.uint64(j) * np.uint64(samples)
                   + np.arange(done, done + b, dtype=np.uint64))
            if poissonized:
                steps = poisson_step_counts(n_or_t, noise, rid)
            else:
                steps = np.full(b, int(n_or_t), dtype=np.int64)
            spins = evolve_batch(np.tile(base, (b, 1)), params, noise,
                                 DYNAMICS_STREAM, rid, steps)
            idx = state_index(spins[:, x1], spins[:, x2])
            counts[:, j] += np.bincount(idx, minlength=4)
            done += b
    return counts


def _counts_to_kernel(counts, params, horizon, samples):
    p = counts / float(samples)
    err = np.sqrt(np.maximum(p * (1.0 - p), 0.0) / samples)
    return KernelMatrix(p, params.gamma, params.coupling, horizon,
                        "monte-carlo", samples=int(samples), stderr=err)


def mc_two_point_kernel(params, x1, x2, n_steps, samples, seed=None,
                        fill=1, force=False):
    """Monte Carlo n-step pair kernel, one column per start state.

    Sites outside the pair start at `fill` (immaterial at zero
    coupling). Refuses rings whose wrap-around would contaminate the
    pair within n steps unless `force` is set.
    """
    d = _ring_distance(x1, x2, params.n_sites)
    _require_light_cone(params, d, int(n_steps), force, "mc_two_point_kernel")
    counts = _mc_pair_counts(params, x1, x2, int(n_steps), int(samples),
                             seed, False, fill)
    return _counts_to_kernel(counts, params, ("discrete", int(n_steps)),
                             samples)


def mc_poissonized_two_point_kernel(params, x1, x2, t, samples, seed=None,
                                    fill=1, force=False,
                                    quantile=1.0 - 1e-9):
    """Monte Carlo continuized pair kernel with per-replica step counts.

    The light-cone guard uses the Poisson quantile at `quantile`, so at
    most a `1 - quantile` fraction of replicas could see the wrap.
    """
    d = _ring_distance(x1, x2, params.n_sites)
    n_q = poisson_quantile(t, quantile)
    _require_light_cone(params, d, n_q, force,
                        "mc_poissonized_two_point_kernel")
    counts = _mc_pair_counts(params, x1, x2, float(t), int(samples), seed,
                             True, fill)
    return _counts_to_kernel(counts, params, ("poisson-mc", float(t)),
                             samples)


def mc_site_marginals(params, n_steps, samples, seed=None, site=0,
                      force=False):
    """Monte Carlo single-site n-step marginals (2x2, column per start).

    Runs the full ring dynamics and tracks one site, so it checks the
    simulator end to end rather than the single-site recursion.
    """
    _require_light_cone(params, 0, int(n_steps), force, "mc_site_marginals")
    noise = NoiseStream(params.seed if seed is None else seed)
    out = np.zeros((2, 2))
    err = np.zeros((2, 2))
    for j, s0 in enumerate((1, -1)):
        base = np.full(params.n_sites, s0, dtype=np.int8)
        plus = 0
        done = 0
        while done < samples:
            b = min(_MC_CHUNK, samples - done)
            rid = (np.uint64(j) * np.uint64(samples)
                   + np.arange(done, done + b, dtype=np.uint64))
            spins = evolve_batch(np.tile(base, (b, 1)), params, noise,
                                 DYNAMICS_STREAM, rid,
                                 np.full(b, int(n_steps), dtype=np.int64))
            plus += int(np.count_nonzero(spins[:, site] == 1))
            done += b
        p = plus / float(samples)
        out[:, j] = (p, 1.0 - p)
        err[:, j] = np.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return out, err


def kernel_to_json(km):
    """Serialize a KernelMatrix to a stable JSON string.

    Entries are stored column-major so column j reads as the
    distribution out of start state j.
    """
    doc = {
        "format": "two-point-kernel/1",
        "states": list(STATE_LABELS),
        "entries": [float(v) for v in np.asarray(km.entries).ravel(order="F")],
        "gamma": km.gamma,
        "coupling": km.coupling,
        "horizon": list(km.horizon),
        "source": km.source,
        "samples": km.samples,
        "stderr": (None if km.stderr is None
                   else [float(v) for v in np.asarray(km.stderr).ravel(order="F")]),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def kernel_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != "two-point-kernel/1":
        raise ValueError("format: two-point-kernel/1 document required")
    e = np.asarray(doc["entries"], dtype=np.float64).reshape((4, 4), order="F")
    err = doc.get("stderr")
    if err is not None:
        err = np.asarray(err, dtype=np.float64).reshape((4, 4), order="F")
    return KernelMatrix(e, float(doc["gamma"]), float(doc["coupling"]),
                        tuple(doc["horizon"]), str(doc["source"]),
                        samples=doc.get("samples"), stderr=err)
