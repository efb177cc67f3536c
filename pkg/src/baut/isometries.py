"""Automorphism groups of positive definite integral lattices.

The group Aut(A) = {g in GL_h(Z) : g^T A g = A} is built column by column:
column j of g must be a lattice vector of norm A[j][j], and its inner
products with the earlier columns are fixed by A. Candidate vectors come
from an exact Fincke-Pohst enumeration over the rationals.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegenerateFormError, IndefiniteFormError, SearchTimeout
from .linalg import IntMatrix, as_matrix, integer_inverse, leading_minors, lll_gram, scale
from .quadform import SymmetrizedForm

log = logging.getLogger(__name__)

# bound on the boolean block (partials x candidates) materialized per step
_BLOCK = 1 << 22


def _completed_squares(a: IntMatrix) -> list[list[Fraction]]:
    """Coefficients q with x^T a x = sum_i q[i][i] (x_i + sum_{j>i} q[i][j] x_j)^2."""
    n = len(a)
    q = [[Fraction(x) for x in row] for row in a]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    return q


@lru_cache(maxsize=64)
def short_vectors(a: IntMatrix, norm: int) -> tuple[tuple[int, ...], ...]:
    """All integer vectors v with v^T a v == norm, for positive definite a.

    Exact: bounds are derived with integer square roots and every candidate
    coordinate is confirmed with rational arithmetic. Sorted lexicographically.
    """
    n = len(a)
    q = _completed_squares(a)
    out: list[tuple[int, ...]] = []
    x = [0] * n
    target = Fraction(norm)

    def rec(i: int, remaining: Fraction):
        c = sum((q[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        t = remaining / q[i][i]
        r = math.isqrt(math.floor(t)) + 1
        lo = math.floor(-c) - r - 1
        hi = math.ceil(-c) + r + 1
        for xi in range(lo, hi + 1):
            used = q[i][i] * (xi + c) ** 2
            if used > remaining:
                continue
            x[i] = xi
            if i == 0:
                if used == remaining:
                    out.append(tuple(x))
            else:
                rec(i - 1, remaining - used)
        x[i] = 0

    if norm > 0:
        rec(n - 1, target)
    elif norm == 0:
        out.append(tuple([0] * n))
    return tuple(sorted(out))


@dataclass
class IsometrySet:
    """All g with g^T a g == a, as an (N, h, h) integer array in canonical order."""

    a: IntMatrix
    elements: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        for g in self.elements:
            yield tuple(tuple(int(v) for v in row) for row in g)


def canonical_order(arr: np.ndarray) -> np.ndarray:
    """Sort a stack of matrices lexicographically on their row-major entries."""
    flat = arr.reshape(len(arr), -1)
    if len(flat) == 0:
        return arr
    order = np.lexsort(flat.T[::-1])
    return arr[order]


def _check_definite(a: IntMatrix) -> IntMatrix:
    minors = leading_minors(a)
    if minors[-1] == 0:
        raise DegenerateFormError("symmetric form is degenerate (determinant 0)")
    if all(m > 0 for m in minors):
        return a
    if all((-1) ** (k + 1) * m > 0 for k, m in enumerate(minors)):
        return scale(-1, a)
    raise IndefiniteFormError("symmetric form is indefinite; its isometry group is infinite")


def _extend_from(
    a: np.ndarray,
    cands: list[np.ndarray],
    cand_gram: list[np.ndarray],
    first: np.ndarray,
    deadline: float | None,
) -> np.ndarray:
    """All column tuples completing the first column ``first``.

    Returns an (M, h, h) array whose columns are the chosen vectors.
    """
    h = a.shape[0]
    partial = first[None, None, :]  # (m, k, h): k chosen columns
    for k in range(1, h):
        if deadline is not None and time.monotonic() > deadline:
            raise SearchTimeout("lattice isometry enumeration exceeded its time budget")
        cand = cands[k]
        gram = cand_gram[k]  # (h, n) = a @ cand.T
        if len(partial) == 0:
            break
        pieces = []
        step = max(1, _BLOCK // max(1, len(cand)))
        for s in range(0, len(partial), step):
            blk = partial[s : s + step]
            ok = np.ones((len(blk), len(cand)), dtype=bool)
            for i in range(k):
                ok &= (blk[:, i, :] @ gram) == a[i, k]
            pi, ci = np.nonzero(ok)
            if len(pi):
                pieces.append(np.concatenate([blk[pi], cand[ci][:, None, :]], axis=1))
        if not pieces:
            return np.zeros((0, h, h), dtype=np.int64)
        partial = np.concatenate(pieces)
    # stored column-wise; transpose so element [r][c] is row r, column c
    return np.ascontiguousarray(partial.transpose(0, 2, 1))


def _worker(args):
    a, cands, grams, firsts, deadline = args
    out = [_extend_from(a, cands, grams, f, deadline) for f in firsts]
    h = a.shape[0]
    return np.concatenate(out) if out else np.zeros((0, h, h), dtype=np.int64)


def enumerate_isometries(
    form: SymmetrizedForm | Sequence[Sequence[int]],
    threads: int = 1,
    max_seconds: float | None = None,
) -> IsometrySet:
    """Enumerate the full isometry group of a definite symmetric matrix.

    Negative definite input is negated first (both have the same group).
    The first-column candidates are split across ``threads`` worker
    processes; results are merged and sorted, so the output does not
    depend on the worker count.
    """
    a = as_matrix(form.a if isinstance(form, SymmetrizedForm) else form)
    if any(a[i][j] != a[j][i] for i in range(len(a)) for j in range(len(a))):
        raise ValueError("matrix is not symmetric")
    pos = _check_definite(a)
    h = len(pos)
    # enumerate on an LLL-reduced Gram matrix, then conjugate back
    t, red = lll_gram(pos)
    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    an = np.array(red, dtype=np.int64)
    cands = [np.array(short_vectors(red, red[k][k]), dtype=np.int64).reshape(-1, h) for k in range(h)]
    grams = [an @ c.T for c in cands]
    log.debug("candidate counts per column: %s", [len(c) for c in cands])

    firsts = list(cands[0])
    if threads <= 1 or len(firsts) < 2:
        elements = _worker((an, cands, grams, firsts, deadline))
    else:
        chunks = [firsts[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_worker, [(an, cands, grams, c, deadline) for c in chunks if c]))
        elements = np.concatenate(parts)
    tn = np.array(t, dtype=np.int64)
    elements = canonical_order(tn @ elements @ np.array(integer_inverse(t), dtype=np.int64))
    if elements.size and np.abs(elements).max() < 1 << 15:
        elements = elements.astype(np.int16)
    return IsometrySet(a=a, elements=elements)


def group_closure_check(s: IsometrySet | Sequence) -> bool:
    """True iff the set contains the identity and is closed under products and inverses."""
    elems = np.asarray(s.elements if isinstance(s, IsometrySet) else s, dtype=np.int64)
    if len(elems) == 0:
        return False
    h = elems.shape[1]
    keys = {g.tobytes() for g in elems}
    if np.eye(h, dtype=np.int64).tobytes() not in keys:
        return False
    for g in elems:
        prods = np.einsum("ij,njk->nik", g, elems)
        if any(p.tobytes() not in keys for p in prods):
            return False
    # closure under products gives inverses once every element is invertible
    return all(abs(round(np.linalg.det(g))) == 1 for g in elems)
