"""Small exact linear-algebra kernels over the rationals.

Matrices are numpy arrays of dtype ``object`` holding :class:`fractions.Fraction`
entries. Sizes in this package stay small (dimension of induced modules,
ranks of lattices), so plain Gauss-Jordan elimination is adequate.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def frac_array(rows) -> np.ndarray:
    a = np.array(rows, dtype=object)
    if a.ndim == 1:
        a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = Fraction(v)
    return out


def frac_eye(n: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    out[:] = Fraction(0)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def frac_zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out[...] = Fraction(0)
    return out


def rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = frac_array(m) if m.dtype != object else m.copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = next((i for i in range(r, rows) if a[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        pv = a[r, c]
        a[r] = [x / pv for x in a[r]]
        for i in range(rows):
            if i != r and a[i, c] != 0:
                f = a[i, c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray) -> int:
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def nullspace(m: np.ndarray) -> np.ndarray:
    """Basis of the right kernel, as the columns of the returned matrix."""
    rows, cols = m.shape
    if rows == 0:
        return frac_eye(cols)
    a, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = frac_zeros((cols, len(free)))
    for k, f in enumerate(free):
        basis[f, k] = Fraction(1)
        for i, p in enumerate(pivots):
            basis[p, k] = -a[i, f]
    return basis


def inverse(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    aug = np.concatenate([frac_array(m) if m.dtype != object else m, frac_eye(n)], axis=1)
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return red[:, n:]


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution of ``a @ x = b`` (``b`` a matrix) or ``None`` if inconsistent."""
    rows, cols = a.shape
    aug = np.concatenate([a, b], axis=1)
    red, pivots = rref(aug)
    if any(p >= cols for p in pivots):
        return None
    x = frac_zeros((cols, b.shape[1]))
    for i, p in enumerate(pivots):
        x[p] = red[i, cols:]
    return x


def is_zero(m: np.ndarray) -> bool:
    return all(v == 0 for v in m.flat)


def mat_power(m: np.ndarray, k: int, eye) -> np.ndarray:
    out = eye
    for _ in range(k):
        out = out @ m
    return out
