"""Exact integer and rational matrix arithmetic.

Matrices are tuples of row tuples holding Python ints (or Fractions), so
every value is immutable and arbitrary precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

IntMatrix = tuple[tuple[int, ...], ...]
RationalMatrix = tuple[tuple[Fraction, ...], ...]


class SingularMatrixError(ValueError):
    """Raised when an inverse is requested for a matrix with zero determinant."""


def as_matrix(m: Sequence[Sequence[int]]) -> IntMatrix:
    """Validate and freeze an integer matrix given as a sequence of rows."""
    rows = tuple(tuple(int(x) for x in row) for row in m)
    if not rows or not rows[0]:
        raise ValueError("matrix must have at least one row and one column")
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise ValueError("matrix rows have unequal lengths")
    return rows


def identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def transpose(m):
    return tuple(zip(*m))


def matmul(a, b):
    bt = transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def matadd(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale(c, m):
    return tuple(tuple(c * x for x in row) for row in m)


def is_square(m) -> bool:
    return all(len(row) == len(m) for row in m)


def determinant(m: Sequence[Sequence[int]]) -> int:
    """Determinant of an integer matrix by fraction-free Bareiss elimination."""
    a = [list(row) for row in as_matrix(m)]
    n = len(a)
    if not is_square(a):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def leading_minors(m: Sequence[Sequence[int]]) -> list[int]:
    n = len(m)
    return [determinant([row[:k] for row in m[:k]]) for k in range(1, n + 1)]


def is_unimodular(m: Sequence[Sequence[int]]) -> bool:
    return abs(determinant(m)) == 1


def rational_inverse(m: Sequence[Sequence[int]]) -> RationalMatrix:
    """Inverse over the rationals by Gauss-Jordan elimination on Fractions.

    Raises SingularMatrixError when the determinant vanishes.
    """
    a = [[Fraction(x) for x in row] for row in m]
    n = len(a)
    if not is_square(a):
        raise ValueError("inverse of a non-square matrix")
    inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError("matrix is singular (determinant 0)")
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        inv[col] = [x / p for x in inv[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return tuple(tuple(row) for row in inv)


def integer_inverse(m: Sequence[Sequence[int]]) -> IntMatrix:
    """Inverse of a unimodular integer matrix, returned as integers."""
    inv = rational_inverse(m)
    if any(x.denominator != 1 for row in inv for x in row):
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(int(x) for x in row) for row in inv)


@dataclass(frozen=True)
class SnfDecomposition:
    """``s = u @ m @ v`` with ``u``, ``v`` unimodular and ``s`` diagonal.

    The diagonal of ``s`` is nonnegative and each entry divides the next.
    """

    u: IntMatrix
    v: IntMatrix
    s: IntMatrix
    invariant_factors: tuple[int, ...]


def snf(m: Sequence[Sequence[int]]) -> SnfDecomposition:
    """Smith normal form with left and right transforms.

    Pivots on the entry of least absolute value in the active block, which
    keeps the transform entries from growing faster than necessary.
    """
    s = [list(row) for row in as_matrix(m)]
    nr, nc = len(s), len(s[0])
    u = [list(row) for row in identity(nr)]
    v = [list(row) for row in identity(nc)]

    def swap_rows(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in s:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):
        # row_dst += c * row_src
        s[dst] = [x + c * y for x, y in zip(s[dst], s[src])]
        u[dst] = [x + c * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, c):
        for row in s:
            row[dst] += c * row[src]
        for row in v:
            row[dst] += c * row[src]

    for t in range(min(nr, nc)):
        while True:
            best = None
            for i in range(t, nr):
                for j in range(t, nc):
                    if s[i][j] and (best is None or abs(s[i][j]) < abs(s[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            if best[0] != t:
                swap_rows(t, best[0])
            if best[1] != t:
                swap_cols(t, best[1])
            p = s[t][t]
            for i in range(t + 1, nr):
                if s[i][t]:
                    add_row(i, t, -(s[i][t] // p))
            for j in range(t + 1, nc):
                if s[t][j]:
                    add_col(j, t, -(s[t][j] // p))
            if any(s[i][t] for i in range(t + 1, nr)) or any(s[t][j] for j in range(t + 1, nc)):
                continue
            bad = next(
                (i for i in range(t + 1, nr) for j in range(t + 1, nc) if s[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]

    diag = tuple(s[i][i] for i in range(min(nr, nc)))
    return SnfDecomposition(
        u=tuple(map(tuple, u)),
        v=tuple(map(tuple, v)),
        s=tuple(map(tuple, s)),
        invariant_factors=diag,
    )


def _gram_schmidt(g: list[list[int]]):
    """mu and squared norms B of the Gram-Schmidt basis, from a Gram matrix."""
    n = len(g)
    mu = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            mu[i][j] = (g[i][j] - sum((mu[j][k] * mu[i][k] * b[k] for k in range(j)), Fraction(0))) / b[j]
        b[i] = g[i][i] - sum((mu[i][k] ** 2 * b[k] for k in range(i)), Fraction(0))
    return mu, b


def lll_gram(a: Sequence[Sequence[int]], delta: Fraction = Fraction(3, 4)) -> tuple[IntMatrix, IntMatrix]:
    """LLL-reduce a positive definite Gram matrix exactly.

    Returns (t, t^T a t) with t unimodular; column i of t is the i-th
    reduced basis vector in the original coordinates.
    """
    n = len(a)
    g = [list(row) for row in as_matrix(a)]
    t = [[int(i == j) for j in range(n)] for i in range(n)]

    def add_col(dst, src, q):  # basis_dst -= q * basis_src
        for r in range(n):
            t[r][dst] -= q * t[r][src]
        for r in range(n):
            g[r][dst] -= q * g[r][src]
        for c in range(n):
            g[dst][c] -= q * g[src][c]

    def swap(i, j):
        for r in range(n):
            t[r][i], t[r][j] = t[r][j], t[r][i]
        g[i], g[j] = g[j], g[i]
        for row in g:
            row[i], row[j] = row[j], row[i]

    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            mu, _ = _gram_schmidt(g)
            q = round(mu[k][j])
            if q:
                add_col(k, j, q)
        mu, b = _gram_schmidt(g)
        if b[k] < (delta - mu[k][k - 1] ** 2) * b[k - 1]:
            swap(k, k - 1)
            k = max(k - 1, 1)
        else:
            k += 1
    return as_matrix(t), as_matrix(g)
