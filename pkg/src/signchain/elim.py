"""Dense elimination helpers for the small (4x4) matrix work.

Partial pivoting throughout. Kept dependency-free so the determinant
routines can run in extended precision where float64 conditioning is
not enough.
"""

from __future__ import annotations

import numpy as np


def lu_factor(a):
    """LU with partial pivoting. Returns (lu, piv, sign).

    `lu` holds L below the diagonal (unit diagonal implied) and U on and
    above it. `piv` is the row permutation applied, `sign` its parity.
    """
    lu = np.array(a, copy=True)
    n = lu.shape[0]
    if lu.shape != (n, n):
        raise ValueError("square matrix required")
    piv = np.arange(n)
    sign = 1
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            piv[[k, p]] = piv[[p, k]]
            sign = -sign
        pivot = lu[k, k]
        if pivot == 0:
            # Singular to working precision; leave the zero column as is.
            continue
        lu[k + 1:, k] /= pivot
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, piv, sign


def det(a):
    """Determinant via the pivoted LU product. Preserves the input dtype."""
    lu, _, sign = lu_factor(a)
    return sign * np.prod(np.diag(lu))


def solve(a, b):
    """Solve a @ x = b by forward/back substitution on the pivoted LU."""
    lu, piv, _ = lu_factor(a)
    n = lu.shape[0]
    bb = np.array(b, copy=True, dtype=lu.dtype)
    one_d = bb.ndim == 1
    if one_d:
        bb = bb[:, None]
    x = bb[piv]
    for k in range(n):
        if lu[k, k] == 0:
            raise np.linalg.LinAlgError("singular matrix")
        x[k + 1:] -= lu[k + 1:, k, None] * x[k]
    for k in range(n - 1, -1, -1):
        x[k] /= lu[k, k]
        x[:k] -= lu[:k, k, None] * x[k]
    return x[:, 0] if one_d else x


def inv(a):
    """Inverse via `solve` against the identity."""
    n = np.asarray(a).shape[0]
    return solve(a, np.eye(n, dtype=np.asarray(a).dtype))
