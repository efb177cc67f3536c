"""Boundary split quadratic linking forms.

For a nondegenerate form with representative Q and symmetrization A, the
finite group T = Z^h / A Z^h carries the pairing b(x, y) = x^T A^-1 y and
the refinement nu(x) = x^T A^-1 Q A^-1 x, both read in Q/Z.

Coordinates: with u the left Smith transform of A, the change x -> u x
carries A Z^h onto diag(d_1, ..., d_h) Z^h, so T is the direct sum of the
cyclic groups Z/d_i in the new standard basis. Summands with d_i = 1 are
dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegenerateFormError
from .linalg import (
    IntMatrix,
    RationalMatrix,
    determinant,
    matadd,
    matmul,
    rational_inverse,
    snf,
    transpose,
)
from .quadform import QuadFormClass


def mod1(x: Fraction) -> Fraction:
    return x - math.floor(x)


def _reduce_mod1(m) -> RationalMatrix:
    return tuple(tuple(mod1(Fraction(x)) for x in row) for row in m)


@dataclass(frozen=True)
class CokernelPresentation:
    """Cyclic coordinates for coker(A).

    ``orders`` keeps only invariant factors > 1; ``keep`` lists their
    positions in the full factor list.
    """

    orders: tuple[int, ...]
    u: IntMatrix
    q_tilde: IntMatrix
    a_tilde: IntMatrix
    invariant_factors: tuple[int, ...]
    keep: tuple[int, ...]

    @property
    def order(self) -> int:
        return math.prod(self.orders)


@dataclass(frozen=True)
class SplitLinkingForm:
    """A finite split quadratic linking form on the sum of Z/d_i.

    ``b_matrix[i][j]`` is b(e_i, e_j) in [0, 1); the refinement is
    nu(x) = x^T R x mod 1 with R = ``refinement_matrix``.
    """

    orders: tuple[int, ...]
    b_matrix: RationalMatrix
    refinement_matrix: RationalMatrix
    # (a_tilde, q_tilde, keep) when built from an integral form; enables
    # the independent lift evaluation of nu
    lift: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def rank(self) -> int:
        return len(self.orders)

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @classmethod
    def from_polynomial(
        cls,
        orders: Sequence[int],
        b_matrix: Sequence[Sequence],
        terms: Sequence[tuple[int, int, Fraction]],
    ) -> "SplitLinkingForm":
        """Build from b and nu given as sum of c * x_i * x_j over (i, j, c) terms."""
        k = len(orders)
        r = [[Fraction(0)] * k for _ in range(k)]
        for i, j, c in terms:
            i, j = min(i, j), max(i, j)
            r[i][j] += Fraction(c)
        return cls(
            orders=tuple(int(d) for d in orders),
            b_matrix=_reduce_mod1(b_matrix),
            refinement_matrix=_reduce_mod1(r),
        )


def cokernel_presentation(f: QuadFormClass) -> CokernelPresentation:
    a = matadd(f.q, transpose(f.q))
    if determinant(a) == 0:
        raise DegenerateFormError("symmetrization is singular; the form is degenerate")
    dec = snf(a)
    u = dec.u
    ut = transpose(u)
    keep = tuple(i for i, d in enumerate(dec.invariant_factors) if d != 1)
    return CokernelPresentation(
        orders=tuple(dec.invariant_factors[i] for i in keep),
        u=u,
        q_tilde=matmul(matmul(u, f.q), ut),
        a_tilde=matmul(matmul(u, a), ut),
        invariant_factors=dec.invariant_factors,
        keep=keep,
    )


def boundary_form(f: QuadFormClass) -> tuple[CokernelPresentation, SplitLinkingForm]:
    """The boundary split quadratic linking form in SNF-canonical generators."""
    pres = cokernel_presentation(f)
    inv = rational_inverse(pres.a_tilde)
    r = matmul(matmul(inv, pres.q_tilde), inv)
    keep = pres.keep
    b = tuple(tuple(mod1(inv[i][j]) for j in keep) for i in keep)
    rr = tuple(tuple(mod1(r[i][j]) for j in keep) for i in keep)
    form = SplitLinkingForm(
        orders=pres.orders,
        b_matrix=b,
        refinement_matrix=rr,
        lift=(pres.a_tilde, pres.q_tilde, keep),
    )
    return pres, form


def _check_vec(form: SplitLinkingForm, x: Sequence[int]):
    if len(x) != form.rank:
        raise ValueError(f"class vector has length {len(x)}, expected {form.rank}")


def eval_linking(form: SplitLinkingForm, x: Sequence[int], y: Sequence[int]) -> Fraction:
    _check_vec(form, x)
    _check_vec(form, y)
    b = form.b_matrix
    return mod1(sum((x[i] * b[i][j] * y[j] for i in range(form.rank) for j in range(form.rank)), Fraction(0)))


def _refinement_by_matrix(form: SplitLinkingForm, x: Sequence[int]) -> Fraction:
    r = form.refinement_matrix
    n = form.rank
    return mod1(sum((x[i] * r[i][j] * x[j] for i in range(n) for j in range(n)), Fraction(0)))


@lru_cache(maxsize=32)
def _lift_data(a_tilde: IntMatrix):
    return abs(determinant(a_tilde)), rational_inverse(a_tilde)


def refinement_via_lift(a_tilde: IntMatrix, q_tilde: IntMatrix, x_full: Sequence[int]) -> Fraction:
    """nu([x]) = theta(z, z) / s^2 where s x = A z, with s = |det A|.

    z = s A^-1 x is integral because s A^-1 is the adjugate up to sign.
    """
    s, inv = _lift_data(tuple(map(tuple, a_tilde)))
    n = len(a_tilde)
    z = [s * sum((inv[i][j] * x_full[j] for j in range(n)), Fraction(0)) for i in range(n)]
    if any(zi.denominator != 1 for zi in z):
        raise ArithmeticError("lift is not integral")
    z = [int(zi) for zi in z]
    theta = sum(z[i] * q_tilde[i][j] * z[j] for i in range(n) for j in range(n))
    return mod1(Fraction(theta, s * s))


def eval_refinement(form: SplitLinkingForm, x: Sequence[int]) -> Fraction:
    _check_vec(form, x)
    value = _refinement_by_matrix(form, x)
    if form.lift is not None:
        a_tilde, q_tilde, keep = form.lift
        full = [0] * len(a_tilde)
        for pos, xi in zip(keep, x):
            full[pos] = xi
        other = refinement_via_lift(a_tilde, q_tilde, full)
        if other != value:
            raise ArithmeticError(f"refinement routes disagree at {tuple(x)}: {value} vs {other}")
    return value


def elements(orders: Sequence[int]) -> np.ndarray:
    """All elements of the sum of Z/d_i, first coordinate most significant."""
    if not orders:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*[np.arange(d, dtype=np.int64) for d in orders], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def common_denominator(*forms: SplitLinkingForm) -> int:
    """A multiple of every denominator of b and nu values of the forms."""
    n = 1
    for f in forms:
        for m in (f.b_matrix, f.refinement_matrix):
            for row in m:
                for x in row:
                    n = math.lcm(n, x.denominator)
    return n


def integer_tables(form: SplitLinkingForm, denom: int) -> tuple[np.ndarray, np.ndarray]:
    """(B, R) scaled by ``denom`` to int64 matrices; values are then read mod denom."""
    bm = np.array([[int(x * denom) for x in row] for row in form.b_matrix], dtype=np.int64).reshape(form.rank, form.rank)
    rm = np.array([[int(x * denom) for x in row] for row in form.refinement_matrix], dtype=np.int64).reshape(form.rank, form.rank)
    return bm, rm


def nu_values(form: SplitLinkingForm, pts: np.ndarray, denom: int) -> np.ndarray:
    """nu of each row of ``pts`` as an integer mod ``denom``."""
    _, rm = integer_tables(form, denom)
    return np.einsum("ni,ij,nj->n", pts, rm, pts) % denom


def b_values(form: SplitLinkingForm, xs: np.ndarray, ys: np.ndarray, denom: int) -> np.ndarray:
    """Matrix of b(x, y) for rows x of ``xs`` and y of ``ys``, as integers mod ``denom``."""
    bm, _ = integer_tables(form, denom)
    return (xs @ bm @ ys.T) % denom


def find_form_isometry(f1: SplitLinkingForm, f2: SplitLinkingForm, max_seconds: float | None = None):
    """A class matrix g with b2(gx, gy) = b1(x, y) and nu2(gx) = nu1(x), or None.

    Column j of the result is the image of the j-th generator of f1.
    """
    from .search import search_isometries

    if f1.orders == f2.orders and f1.b_matrix == f2.b_matrix and f1.refinement_matrix == f2.refinement_matrix:
        return tuple(tuple(int(i == j) for j in range(f1.rank)) for i in range(f1.rank))
    found = search_isometries(f1, f2, first_only=True, max_seconds=max_seconds)
    if len(found) == 0:
        return None
    return tuple(tuple(int(x) for x in row) for row in found[0])
