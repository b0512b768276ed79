"""Exact Gaussian elimination over Gaussian rationals (small dense matrices)."""

from __future__ import annotations

from typing import Sequence

from .superalg import ONE, ZERO, Scalar

Matrix = list[list[Scalar]]


def zeros(rows: int, cols: int) -> Matrix:
    return [[ZERO] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence[Scalar]], b: Sequence[Sequence[Scalar]]) -> Matrix:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    if any(len(row) != inner for row in a):
        raise ValueError("dimension mismatch in matrix product")
    out = zeros(len(a), cols)
    for i, row in enumerate(a):
        for k, x in enumerate(row):
            if not x:
                continue
            for j in range(cols):
                y = b[k][j]
                if y:
                    out[i][j] = out[i][j] + x * y
    return out


def row_pivots(m: Sequence[Sequence[Scalar]], ncols: int | None = None) -> list[int | None]:
    """Process rows in order; each row, reduced by the earlier pivots, claims its leftmost nonzero column.

    Returns the claimed column per row (None for rows dependent on earlier ones).
    """
    work = [list(r) for r in m]
    ncols = len(work[0]) if work else (ncols or 0)
    pivots: list[int | None] = []
    done: list[tuple[int, list[Scalar]]] = []
    for row in work:
        for col, prow in done:
            f = row[col]
            if f:
                row = [x - f * y for x, y in zip(row, prow)]
        col = next((j for j, x in enumerate(row) if x), None)
        pivots.append(col)
        if col is not None:
            inv = row[col].inverse()
            prow = [x * inv for x in row]
            done.append((col, prow))
    return pivots


def rank(m: Sequence[Sequence[Scalar]]) -> int:
    return sum(p is not None for p in row_pivots(m))


def inverse(m: Sequence[Sequence[Scalar]]) -> Matrix:
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("matrix is not square")
    a = [list(r) + e for r, e in zip(m, identity(n))]
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c]), None)
        if p is None:
            raise ZeroDivisionError("matrix is singular")
        a[c], a[p] = a[p], a[c]
        inv = a[c][c].inverse()
        a[c] = [x * inv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[n:] for row in a]


def is_invertible(m: Sequence[Sequence[Scalar]]) -> bool:
    return len(m) == (len(m[0]) if m else 0) and rank(m) == len(m)
