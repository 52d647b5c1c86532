"""Dense LU factorization with partial pivoting, plus the determinant and
linear-solve helpers built on it."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, Singular


def lu_factor(a):
    """Doolittle LU with row pivoting: ``P a = L U``.

    Returns ``(lu, perm, sign)`` where ``lu`` stores L (unit diagonal,
    strictly below) and U (on and above the diagonal), ``perm[i]`` is the
    source row of row ``i``, and ``sign`` is the permutation parity.
    """
    lu = np.array(a, dtype=float)
    if lu.ndim != 2 or lu.shape[0] != lu.shape[1]:
        raise DimensionMismatch(f"LU needs a square matrix, got shape {lu.shape}")
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for c in range(n):
        p = c + int(np.argmax(np.abs(lu[c:, c])))
        if p != c:
            lu[[c, p]] = lu[[p, c]]
            perm[[c, p]] = perm[[p, c]]
            sign = -sign
        pivot = lu[c, c]
        if pivot == 0.0:
            continue
        lu[c + 1:, c] /= pivot
        lu[c + 1:, c + 1:] -= np.outer(lu[c + 1:, c], lu[c, c + 1:])
    return lu, perm, sign


def det(a) -> float:
    lu, _, sign = lu_factor(a)
    return sign * float(np.prod(np.diag(lu)))


def singular_tolerance(a) -> float:
    """1e-9 * max(1, ||a||_inf ** n): the cutoff below which |det a| counts as zero."""
    a = np.asarray(a, dtype=float)
    norm = float(np.max(np.sum(np.abs(a), axis=1)))
    return 1e-9 * max(1.0, norm ** a.shape[0])


def is_singular(a) -> bool:
    return abs(det(a)) < singular_tolerance(a)


def solve(a, b):
    """Solve ``a x = b``; raises Singular when ``a`` fails :func:`is_singular`."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} for {a.shape[0]}x{a.shape[0]} system")
    lu, perm, sign = lu_factor(a)
    d = sign * float(np.prod(np.diag(lu)))
    if abs(d) < singular_tolerance(a):
        raise Singular(f"|det| = {abs(d):.3e} below tolerance")
    n = a.shape[0]
    y = b[perm].copy()
    for i in range(n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y
