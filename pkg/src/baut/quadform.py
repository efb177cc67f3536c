"""Integral quadratic forms held as classes in the quadratic Q-group.

A form on Z^h is a class [Q] of h x h integer matrices where Q and
Q + (X - X^T) are identified. The symmetrization A = Q + Q^T is the
adjoint of the associated symmetric bilinear form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

from .linalg import (
    IntMatrix,
    as_matrix,
    determinant,
    is_square,
    is_unimodular,
    leading_minors,
    matadd,
    matmul,
    scale,
    transpose,
)

Sign = Literal["plus", "minus"]

THEOREM_MAX_GENUS = 8


@dataclass(frozen=True)
class QuadFormClass:
    h: int
    q: IntMatrix
    sign: Sign = "plus"

    def __post_init__(self):
        if len(self.q) != self.h or not is_square(self.q):
            raise ValueError(f"representative must be {self.h}x{self.h}")

    @classmethod
    def from_matrix(cls, m: Sequence[Sequence[int]], sign: Sign = "plus") -> "QuadFormClass":
        q = as_matrix(m)
        if not is_square(q):
            raise ValueError(f"matrix is not square ({len(q)}x{len(q[0])})")
        return cls(h=len(q), q=q, sign=sign)

    def negated(self) -> "QuadFormClass":
        other: Sign = "minus" if self.sign == "plus" else "plus"
        return QuadFormClass(self.h, scale(-1, self.q), other)


@dataclass(frozen=True)
class SymmetrizedForm:
    a: IntMatrix
    det: int
    definite: bool
    positive: bool

    @property
    def rank(self) -> int:
        return len(self.a)


def standard_family(h: int, sign: Sign = "plus") -> QuadFormClass:
    """The genus-h form: first row all 4's, 2's on and above the diagonal below it."""
    if h < 1:
        raise ValueError(f"genus must be >= 1, got {h}")
    if h > THEOREM_MAX_GENUS:
        warnings.warn(
            f"h={h} lies outside the range 1..{THEOREM_MAX_GENUS} covered by the triviality criterion",
            stacklevel=2,
        )
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    q = tuple(
        tuple(4 if i == 0 else (2 if j >= i else 0) for j in range(h)) for i in range(h)
    )
    if sign == "minus":
        q = scale(-1, q)
    return QuadFormClass(h=h, q=q, sign=sign)


def symmetrize(f: QuadFormClass) -> SymmetrizedForm:
    a = matadd(f.q, transpose(f.q))
    det = determinant(a)
    minors = leading_minors(a)
    positive = all(m > 0 for m in minors)
    negative = all((-1) ** (k + 1) * m > 0 for k, m in enumerate(minors))
    return SymmetrizedForm(a=a, det=det, definite=positive or negative, positive=positive)


def qplus_equivalent(f1: QuadFormClass, f2: QuadFormClass) -> bool:
    """True iff the representatives differ by an antisymmetric matrix."""
    if f1.h != f2.h:
        raise ValueError(f"rank mismatch: {f1.h} vs {f2.h}")
    d = [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(f1.q, f2.q)]
    n = f1.h
    return all(d[i][j] == -d[j][i] for i in range(n) for j in range(i, n))


def change_basis(f: QuadFormClass, p: Sequence[Sequence[int]]) -> QuadFormClass:
    """Representative p^T q p of the form in the basis given by the columns of p."""
    p = as_matrix(p)
    if len(p) != f.h or not is_square(p):
        raise ValueError(f"basis change must be {f.h}x{f.h}")
    if not is_unimodular(p):
        raise ValueError("basis change is not unimodular")
    return QuadFormClass(h=f.h, q=matmul(matmul(transpose(p), f.q), p), sign=f.sign)


def evaluate(f: QuadFormClass, x: Sequence[int]) -> int:
    if len(x) != f.h:
        raise ValueError(f"vector length {len(x)} != rank {f.h}")
    return sum(x[i] * f.q[i][j] * x[j] for i in range(f.h) for j in range(f.h))
