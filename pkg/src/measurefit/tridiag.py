"""Tridiagonal solves and products (Thomas algorithm), compiled with numba.

Convention for an ``n x n`` matrix: ``lower`` and ``upper`` have length
``n - 1``; ``lower[i]`` sits at row ``i + 1``, column ``i`` and ``upper[i]`` at
row ``i``, column ``i + 1``.  No pivoting: callers must supply diagonally
dominant systems.
"""

import numpy as np
from numba import njit

__all__ = ["thomas", "tridiag_matvec"]


@njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    n = diag.shape[0]
    cp = np.empty(n)
    x = np.empty(n)
    denom = diag[0]
    cp[0] = upper[0] / denom if n > 1 else 0.0
    x[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = upper[i] / denom
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


@njit(cache=True)
def _matvec(lower, diag, upper, v):
    n = diag.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = diag[i] * v[i]
        if i > 0:
            s += lower[i - 1] * v[i - 1]
        if i < n - 1:
            s += upper[i] * v[i + 1]
        out[i] = s
    return out


def _check(lower, diag, upper, vec):
    n = diag.shape[0]
    if lower.shape != (n - 1,) or upper.shape != (n - 1,) or vec.shape != (n,):
        raise ValueError("inconsistent tridiagonal shapes: "
                         f"lower {lower.shape}, diag {diag.shape}, "
                         f"upper {upper.shape}, vector {vec.shape}")


def thomas(lower, diag, upper, rhs):
    """Solve ``A x = rhs`` for tridiagonal ``A``."""
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (lower, diag, upper, rhs)]
    _check(*args)
    return _thomas(*args)


def tridiag_matvec(lower, diag, upper, v):
    """Return ``A @ v`` for tridiagonal ``A``."""
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (lower, diag, upper, v)]
    _check(*args)
    return _matvec(*args)
