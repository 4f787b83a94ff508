"""Three-band linear algebra.

Storage convention throughout the package: ``sub`` has length n-1 and holds
the entries below the diagonal (``M[i+1, i] = sub[i]``), ``diag`` has length
n, ``sup`` has length n-1 (``M[i, i+1] = sup[i]``).
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .errors import LengthMismatch, NumericalError


def _check(sub, diag, sup):
    n = len(diag)
    if len(sub) != n - 1 or len(sup) != n - 1:
        raise LengthMismatch(f"band lengths {len(sub)}, {n}, {len(sup)} do not form a tridiagonal matrix")


def matvec(sub, diag, sup, x):
    x = np.asarray(x)
    y = diag * x
    y[1:] += sub * x[:-1]
    y[:-1] += sup * x[1:]
    return y


def to_dense(sub, diag, sup):
    return np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)


def thomas_solve(sub, diag, sup, rhs):
    """Plain forward elimination / back substitution, no pivoting.

    Reference implementation; stable for diagonally dominant matrices.
    """
    _check(sub, diag, sup)
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    beta = diag[0]
    if beta == 0:
        raise NumericalError("zero pivot in tridiagonal elimination")
    c[0] = sup[0] / beta if n > 1 else 0.0
    d[0] = rhs[0] / beta
    for i in range(1, n):
        beta = diag[i] - sub[i - 1] * c[i - 1]
        if beta == 0:
            raise NumericalError("zero pivot in tridiagonal elimination")
        if i < n - 1:
            c[i] = sup[i] / beta
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / beta
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def solve(sub, diag, sup, rhs):
    """One-shot solve through LAPACK ``gtsv``."""
    _check(sub, diag, sup)
    *_, x, info = lapack.dgtsv(
        np.array(sub, dtype=float),
        np.array(diag, dtype=float),
        np.array(sup, dtype=float),
        np.array(rhs, dtype=float),
    )
    if info != 0:
        raise NumericalError(f"dgtsv failed with info={info}")
    return x


class Factorized:
    """LU factors of a fixed tridiagonal matrix, reused across many right-hand sides."""

    def __init__(self, sub, diag, sup):
        _check(sub, diag, sup)
        self._dense = None
        if len(diag) < 3:
            # scipy's dgttrf wrapper rejects n < 3; a dense LU is exact here
            self._dense = linalg.lu_factor(to_dense(sub, diag, sup))
            return
        dl, d, du, du2, ipiv, info = lapack.dgttrf(
            np.array(sub, dtype=float), np.array(diag, dtype=float), np.array(sup, dtype=float)
        )
        if info != 0:
            raise NumericalError(f"dgttrf failed with info={info}")
        self._factors = (dl, d, du, du2, ipiv)

    def solve(self, rhs):
        if self._dense is not None:
            return linalg.lu_solve(self._dense, np.asarray(rhs, dtype=float))
        x, info = lapack.dgttrs(*self._factors, np.asarray(rhs, dtype=float))
        if info != 0:
            raise NumericalError(f"dgttrs failed with info={info}")
        return x
