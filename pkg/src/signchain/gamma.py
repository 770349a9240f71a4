"""Quadratic-form matrices of the pair dynamics and their normal forms.

For a function f of two tracked spins, the first and second iterated
square-field forms of the jump generator L = P - I are quadratic in the
vector of f-values on the four restricted states:

    2 Gamma(f, f)(eta)  = f' N(eta) f
    4 Gamma2(f, f)(eta) = f' M(eta) f

where N collects first differences of the horizon kernel columns over
one dynamics step out of eta, and M collects second differences over
two steps minus twice the one-step covariance. Both matrices therefore
factor through difference transforms of the kernel matrix; conjugating
by Q_i B^{-1} (Q_i normalizes row i, B is the horizon kernel) brings
them to a normal form whose spectrum yields the curvature ratio.

Everything here is exact and zero-coupling; sampled estimates for
general coupling live in mcgamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elim
from .kernels import (
    KernelMatrix,
    normal_cdf,
    pair_step_distribution,
    poisson_weights,
    poissonized_kernel_k0,
    state_index,
    step_autocorrelation,
    two_point_kernel_k0,
)

__all__ = [
    "normalization_transform",
    "row_swap",
    "first_difference",
    "second_difference",
    "masked_identity",
    "resolve_kernel_k0",
    "b_vector_k0",
    "GammaPair",
    "pair_matrices_k0",
    "gamma_matrix_k0",
    "gamma2_matrix_k0",
    "gamma_from_matrix",
    "gamma2_from_matrix",
    "gamma_of_f",
    "starred",
    "starred_pair_k0",
    "explicit_starred_k0",
    "TruncationSplit",
    "decompose",
    "similarity_map",
    "similarity_check_k0",
]

_DET_FLOOR = 1e-12


def normalization_transform(i):
    """Identity with row i replaced by all ones."""
    q = np.eye(4)
    q[int(i), :] = 1.0
    return q


def row_swap(i, j):
    p = np.eye(4)
    p[[int(i), int(j)]] = p[[int(j), int(i)]]
    return p


def masked_identity(i):
    """Identity with the i-th diagonal entry zeroed."""
    m = np.eye(4)
    m[int(i), int(i)] = 0.0
    return m


def first_difference(i):
    """4x4 transform with column l equal to e_l - e_i (column i zero).

    Applying the horizon kernel to it turns kernel columns into their
    differences against the column of the start state, which is what
    the square-field form sums over.
    """
    d = np.eye(4)
    d[int(i), :] -= 1.0
    return d


def second_difference(i):
    """4x16 transform; column 4 w + z equals e_z - 2 e_w + e_i.

    Indexing matches a two-step path eta -> w -> z laid out row-major
    in (w, z).
    """
    d = np.zeros((4, 16))
    for w in range(4):
        for z in range(4):
            col = 4 * w + z
            d[z, col] += 1.0
            d[w, col] -= 2.0
            d[int(i), col] += 1.0
    return d


def resolve_kernel_k0(gamma, horizon):
    """Kernel for a horizon descriptor.

    ("discrete", n) gives the n-step kernel; ("poisson", t) the full
    continuized kernel; ("poisson", t, eps) its truncation at tail
    mass eps.
    """
    kind = horizon[0]
    if kind == "discrete":
        return two_point_kernel_k0(int(horizon[1]), gamma)
    if kind == "poisson":
        eps = horizon[2] if len(horizon) > 2 else None
        return poissonized_kernel_k0(float(horizon[1]), gamma, eps)
    raise ValueError("horizon: ('discrete', n) or ('poisson', t[, eps]) required")


def b_vector_k0(state, gamma, horizon):
    """Kernel column out of a restricted state, as a 4-vector."""
    return resolve_kernel_k0(gamma, horizon).column(state)


@dataclass(frozen=True)
class GammaPair:
    """The two quadratic-form matrices at one evaluation state."""

    state: int
    gamma: float
    coupling: float
    horizon: tuple
    n_matrix: np.ndarray
    m_matrix: np.ndarray
    source: str
    samples: int | None = None
    n_stderr: np.ndarray | None = None
    m_stderr: np.ndarray | None = None

    def __post_init__(self):
        for name in ("n_matrix", "m_matrix"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.shape != (4, 4):
                raise ValueError(f"{name}: 4x4 matrix required")
            object.__setattr__(self, name, a)


def _assemble_pair(b_h, q_step, state):
    """Exact N and M from a horizon kernel and the one-step kernel.

    N = (B D_i) diag(q) (B D_i)'            over one step out of state i,
    M = A diag(p) A' - 2 B diag(q) B' + 2 (B q)(B q)'  with A = B D2_i
    and p the two-step path weights q(w|i) q(z|w). The column sums of
    both difference transforms vanish, so N and M inherit an exactly
    zero row and column after the Q_i B^{-1} conjugation.
    """
    i = int(state)
    q = q_step[:, i]
    d1 = first_difference(i)
    bd = b_h @ d1
    n_mat = bd @ np.diag(q) @ bd.T

    p = (q[:, None] * q_step.T).ravel()  # p[4 w + z] = q(w|i) q(z|w)
    a = b_h @ second_difference(i)
    i1 = a @ np.diag(p) @ a.T
    i2 = b_h @ np.diag(q) @ b_h.T
    mean = b_h @ q
    i3 = np.outer(mean, mean)
    m_mat = i1 - 2.0 * i2 + 2.0 * i3
    return n_mat, m_mat


def pair_matrices_k0(gamma, horizon, state=0):
    """Exact zero-coupling GammaPair at a restricted state."""
    km = resolve_kernel_k0(gamma, horizon)
    q_step = two_point_kernel_k0(1, gamma).entries
    n_mat, m_mat = _assemble_pair(km.entries, q_step, state)
    return GammaPair(int(state), float(gamma), 0.0, tuple(horizon),
                     n_mat, m_mat, "closed-form")


def gamma_matrix_k0(gamma, horizon, state=0):
    return pair_matrices_k0(gamma, horizon, state).n_matrix


def gamma2_matrix_k0(gamma, horizon, state=0):
    return pair_matrices_k0(gamma, horizon, state).m_matrix


def gamma_from_matrix(fvals, n_matrix):
    """Gamma(f, f) from its matrix: one half of the quadratic form."""
    f = np.asarray(fvals, dtype=np.float64)
    return 0.5 * float(f @ np.asarray(n_matrix) @ f)


def gamma2_from_matrix(fvals, m_matrix):
    """Gamma2(f, f) from its matrix: one quarter of the quadratic form."""
    f = np.asarray(fvals, dtype=np.float64)
    return 0.25 * float(f @ np.asarray(m_matrix) @ f)


def gamma_of_f(fvals, spins, x1, x2, params):
    """Gamma(f, f) at a full configuration, any coupling.

    One half of the expected squared increment of f over a single
    synchronous step; the pair law out of `spins` is the exact product
    of the two site flip probabilities. Vectorized over a batch of
    configurations when `spins` is 2-d.
    """
    f = np.asarray(fvals, dtype=np.float64)
    if f.shape != (4,):
        raise ValueError("fvals: four values, one per restricted state")
    s = np.asarray(spins, dtype=np.int8)
    one_d = s.ndim == 1
    s2d = s[None, :] if one_d else s
    q = pair_step_distribution(s2d, x1, x2, params)
    cur = state_index(s2d[:, x1], s2d[:, x2])
    diff = f[None, :] - f[cur][:, None]
    out = 0.5 * np.sum(q * diff * diff, axis=1)
    return float(out[0]) if one_d else out


def starred(matrix, kernel, state):
    """Conjugate a quadratic-form matrix by Q_i B^{-1}.

    `kernel` may be a KernelMatrix or a plain 4x4 array. Raises when
    the kernel is numerically singular (|det| below 1e-12): the normal
    form is meaningless past that point. The inversion and conjugation
    run in extended precision: long horizons make the kernel badly
    conditioned while the result stays order one, so the cancellation
    must happen above float64 to keep entry errors near 1e-13.
    """
    b = kernel.entries if isinstance(kernel, KernelMatrix) else np.asarray(kernel)
    b = b.astype(np.longdouble)
    if abs(float(elim.det(b))) < _DET_FLOOR:
        raise ValueError("kernel: determinant below 1e-12, not invertible")
    x = normalization_transform(state).astype(np.longdouble) @ elim.inv(b)
    out = x @ np.asarray(matrix, dtype=np.longdouble) @ x.T
    return out.astype(np.float64)


def _resolve_entries_ld(gamma, horizon):
    """Horizon kernel rebuilt in extended precision.

    The zero-coupling kernels are closed forms in the one-step
    autocorrelation, so they can be evaluated at any precision. Kept
    private: only the starred route needs it, because there the kernel
    conditioning grows like theta^(-2n) while the result stays order
    one, and float64 intermediates would contaminate the cancellation.
    """
    th = np.longdouble(step_autocorrelation(gamma))

    def tensor_square(m):
        t1 = np.array([[(1.0 + m) / 2.0, (1.0 - m) / 2.0],
                       [(1.0 - m) / 2.0, (1.0 + m) / 2.0]],
                      dtype=np.longdouble)
        return np.kron(t1, t1)

    kind = horizon[0]
    if kind == "discrete":
        return tensor_square(th ** int(horizon[1]))
    if kind != "poisson":
        raise ValueError(
            "horizon: ('discrete', n) or ('poisson', t[, eps]) required")
    t = np.longdouble(float(horizon[1]))
    eps = horizon[2] if len(horizon) > 2 else None
    if eps is None:
        ones = np.ones((2, 2), dtype=np.longdouble)
        rad = np.array([[1.0, -1.0], [-1.0, 1.0]], dtype=np.longdouble)
        m1 = np.exp(-t * (1.0 - th))
        m2 = np.exp(-t * (1.0 - th * th))
        return 0.25 * (np.kron(ones, ones)
                       + m1 * (np.kron(ones, rad) + np.kron(rad, ones))
                       + m2 * np.kron(rad, rad))
    pw = poisson_weights(float(horizon[1]), float(eps))
    acc = np.zeros((4, 4), dtype=np.longdouble)
    for k, w in enumerate(pw.weights.astype(np.longdouble)):
        acc += w * tensor_square(th ** k)
    return acc


def starred_pair_k0(gamma, horizon, state=0):
    """Normal forms (N*, M*) of the zero-coupling pair at a state.

    Assembled and conjugated in extended precision end to end, then
    cast back; the composition cancels the horizon kernel exactly, and
    the cancellation must happen above float64 once the kernel is badly
    conditioned (long discrete horizons).
    """
    b_h = _resolve_entries_ld(gamma, horizon)
    q_step = _resolve_entries_ld(gamma, ("discrete", 1))
    n_mat, m_mat = _assemble_pair(b_h, q_step, state)
    return (starred(n_mat, b_h, state), starred(m_mat, b_h, state))


def explicit_starred_k0(gamma):
    """Closed-form normal forms at the all-plus pair state.

    N* is diagonal in the one-step exit probabilities; M* has a 3x3
    core in the three flip probabilities with entries polynomial in
    Phi(gamma - 1) and Phi(1 - gamma). Horizon independent: the
    conjugation removes the horizon kernel entirely at zero coupling.
    """
    pp = float(normal_cdf(1.0 - gamma))   # stay probability for a + spin
    pm = float(normal_cdf(gamma - 1.0))   # flip probability for a + spin
    n_star = np.diag([0.0, pp * pm, pp * pm, pm * pm])
    al = 4.0 * pp * pm ** 2 + 2.0 * pp ** 2 * pm ** 2
    be = 2.0 * pp ** 2 * pm ** 2 - 4.0 * pp * pm ** 3
    de = -2.0 * pp ** 2 * pm ** 2
    ep = 2.0 * pm ** 2 + 2.0 * pm ** 4
    m_star = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [0.0, al, be, de],
        [0.0, be, al, de],
        [0.0, de, de, ep],
    ])
    return n_star, m_star


@dataclass(frozen=True)
class TruncationSplit:
    """Horizon split of the form matrices at a Poisson truncation level.

    `n_trunc`/`m_trunc` use the truncated mixture kernel; `n_tail` and
    `m_tail` are the exact remainders against the full mixture. The
    certificate bounds every remainder entry by 2 eps for N and 8 eps
    for M.
    """

    t: float
    eps: float
    level: int
    state: int
    n_trunc: np.ndarray
    m_trunc: np.ndarray
    n_tail: np.ndarray
    m_tail: np.ndarray

    @property
    def n_bound(self):
        return 2.0 * self.eps

    @property
    def m_bound(self):
        return 8.0 * self.eps

    @property
    def n_tail_max(self):
        return float(np.max(np.abs(self.n_tail)))

    @property
    def m_tail_max(self):
        return float(np.max(np.abs(self.m_tail)))

    @property
    def certified(self):
        return self.n_tail_max <= self.n_bound and self.m_tail_max <= self.m_bound


def decompose(gamma, t, eps, state=0):
    """Split N and M at the certified Poisson truncation level.

    Zero coupling, where the full-mixture matrices have a closed form,
    so the tails are computed exactly rather than bounded.
    """
    level = poisson_weights(t, eps).level
    full = pair_matrices_k0(gamma, ("poisson", t), state)
    trunc = pair_matrices_k0(gamma, ("poisson", t, eps), state)
    return TruncationSplit(
        float(t), float(eps), level, int(state),
        trunc.n_matrix, trunc.m_matrix,
        full.n_matrix - trunc.n_matrix,
        full.m_matrix - trunc.m_matrix,
    )


_SWAP_PARTNERS = {1: (0, 1, 2, 3), 2: (0, 2, 1, 3), 3: (0, 3, 1, 2)}


def similarity_map(state):
    """Permutation carrying the all-plus normal form to state i.

    Swapping the pair to state i relabels the restricted states by the
    product of two transpositions; that conjugation maps the normal
    forms at the all-plus state onto the ones at state i, uniformly in
    any multiple of the masked identity.
    """
    i = int(state)
    if i not in _SWAP_PARTNERS:
        raise ValueError("state: 1, 2, or 3 required (0 is the reference)")
    a, b, c, d = _SWAP_PARTNERS[i]
    return row_swap(a, b) @ row_swap(c, d)


def similarity_check_k0(gamma, horizon, shifts=()):
    """Max deviation of the conjugation identity at each non-reference state.

    For every state i in {1, 2, 3} and every shift c, compares the
    normal forms computed directly at state i against the permuted
    all-plus forms, with c times the masked identity subtracted on both
    sides. Returns {state: {"n": err, "m": err}} of max-abs deviations.
    """
    n0, m0 = starred_pair_k0(gamma, horizon, 0)
    out = {}
    shifts = [0.0] + [float(c) for c in shifts]
    for i in (1, 2, 3):
        ni, mi = starred_pair_k0(gamma, horizon, i)
        pi = similarity_map(i)
        mask_i = masked_identity(i)
        err_n = 0.0
        err_m = 0.0
        for c in shifts:
            lhs_n = ni - c * mask_i
            rhs_n = pi @ (n0 - c * masked_identity(0)) @ pi.T
            lhs_m = mi - c * mask_i
            rhs_m = pi @ (m0 - c * masked_identity(0)) @ pi.T
            err_n = max(err_n, float(np.max(np.abs(lhs_n - rhs_n))))
            err_m = max(err_m, float(np.max(np.abs(lhs_m - rhs_m))))
        out[i] = {"n": err_n, "m": err_m}
    return out
