"""The boundary homomorphism Aut(V, theta) -> Aut(boundary form) and its image.

Class matrices act on the sum of Z/d_i; entry (i, j) is kept in [0, d_i)
(and is then automatically divisible by d_i / gcd(d_i, d_j)). Sets of
class matrices are (N, k, k) arrays of a compact unsigned dtype in
row-major lexicographic order, so equal sets are equal arrays.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boundary import (
    CokernelPresentation,
    SplitLinkingForm,
    boundary_form,
    common_denominator,
    elements,
    integer_tables,
)
from .errors import SearchTimeout
from .isometries import IsometrySet, enumerate_isometries
from .linalg import integer_inverse, matmul, rational_inverse, transpose
from .quadform import THEOREM_MAX_GENUS, QuadFormClass, symmetrize
from .search import canonical_set, invertible_mask, keys, search_isometries, storage_dtype


@dataclass(frozen=True)
class FiniteAutMatrix:
    orders: tuple[int, ...]
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for i, di in enumerate(self.orders):
            for j, dj in enumerate(self.orders):
                x = self.entries[i][j]
                if not 0 <= x < di or x % (di // math.gcd(di, dj)):
                    raise ValueError(f"entry ({i},{j}) = {x} is not normalized for orders {self.orders}")

    @classmethod
    def from_array(cls, orders, arr) -> "FiniteAutMatrix":
        return cls(tuple(orders), tuple(tuple(int(x) for x in row) for row in arr))

    def as_array(self) -> np.ndarray:
        k = len(self.orders)
        return np.array(self.entries, dtype=np.int64).reshape(k, k)

    def is_invertible(self) -> bool:
        return bool(invertible_mask(self.as_array()[None], self.orders)[0])


def normalize(mats: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    """Reduce row i of each class matrix mod d_i, in the compact storage dtype."""
    d = np.array(orders, dtype=np.int64).reshape(1, -1, 1)
    out = np.asarray(mats, dtype=np.int64) % d
    return out.astype(storage_dtype(max(orders, default=1)))


def compose(f: np.ndarray, g: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    """Batched composition f o g of class matrices (broadcasting over leading axes)."""
    return normalize(np.matmul(np.asarray(f, dtype=np.int64), np.asarray(g, dtype=np.int64)), orders)


def _preserves(form: SplitLinkingForm, mats: np.ndarray) -> np.ndarray:
    """True where the class matrix keeps nu on generators and b on generator pairs.

    By the split identity these imply preservation on all of T.
    """
    k = form.rank
    denom = common_denominator(form)
    bm, rm = integer_tables(form, denom)
    if k == 0:
        return np.ones(len(mats), dtype=bool)
    mats = np.asarray(mats, dtype=np.int64)
    nu_img = np.einsum("nij,ik,nkj->nj", mats, rm, mats) % denom
    b_img = np.einsum("nij,ik,nkl->njl", mats, bm, mats) % denom
    ok = (nu_img == np.diag(rm)[None, :] % denom).all(axis=1)
    ok &= (b_img == bm[None] % denom).all(axis=(1, 2))
    return ok


def to_presentation_basis(pres: CokernelPresentation, g) -> tuple:
    """Conjugate an isometry of A into the basis where it preserves a_tilde: u^-T g u^T."""
    ut = transpose(pres.u)
    return matmul(matmul(integer_inverse(ut), g), ut)


def boundary_of_isometry(pres: CokernelPresentation, g, form: SplitLinkingForm | None = None) -> FiniteAutMatrix:
    """The induced automorphism (g^-1)^T of coker(a_tilde), for g preserving a_tilde."""
    g = tuple(tuple(int(x) for x in row) for row in g)
    at = pres.a_tilde
    if matmul(matmul(transpose(g), at), g) != at:
        raise ValueError("matrix is not an isometry of the presentation's symmetric form")
    inv_t = transpose(rational_inverse(g))
    keep = pres.keep
    arr = np.array([[int(inv_t[i][j]) for j in keep] for i in keep], dtype=np.int64).reshape(len(keep), len(keep))
    out = FiniteAutMatrix.from_array(pres.orders, normalize(arr[None], pres.orders)[0])
    if form is not None and not _preserves(form, out.as_array()[None])[0]:
        raise ArithmeticError("boundary of an isometry fails to preserve the linking form")
    return out


def boundaries(pres: CokernelPresentation, auts: IsometrySet | np.ndarray) -> np.ndarray:
    """Batched boundary map on isometries of A given in the original basis.

    In presentation coordinates the class map is u g^-T u^-1; g^-T is
    computed as A g A^-1 (valid since g^T A g = A), and u, u^-1 may be
    reduced mod the exponent because only residues mod d_i are kept.
    """
    elems = auts.elements if isinstance(auts, IsometrySet) else np.asarray(auts)
    k = len(pres.orders)
    if k == 0:
        return np.zeros((len(elems), 0, 0), dtype=np.int64)
    if isinstance(auts, IsometrySet):
        a = auts.a
    else:
        uinv = integer_inverse(pres.u)
        a = matmul(matmul(uinv, pres.a_tilde), transpose(uinv))
    h = len(a)
    an = np.array(a, dtype=np.int64)
    inv = rational_inverse(a)
    den = math.lcm(*(x.denominator for row in inv for x in row))
    adj = np.array([[int(x * den) for x in row] for row in inv], dtype=np.int64)
    exponent = math.lcm(*pres.orders)
    u = np.array([[x % exponent for x in pres.u[i]] for i in pres.keep], dtype=np.int64)
    uinv_full = integer_inverse(pres.u)
    uinv = np.array([[uinv_full[r][j] % exponent for j in pres.keep] for r in range(h)], dtype=np.int64)
    out = np.empty((len(elems), k, k), dtype=storage_dtype(exponent))
    gmax = int(np.abs(elems).max()) if elems.size else 0
    wide = h * h * int(np.abs(an).max()) * gmax * int(np.abs(adj).max()) >= 1 << 62
    if wide:
        # exact Python integers when int64 could overflow
        an, adj = an.astype(object), adj.astype(object)
    step = 1 << 16
    for s in range(0, len(elems), step):
        g = elems[s : s + step].astype(object if wide else np.int64)
        num = an @ g @ adj
        if (num % den).any():
            raise ArithmeticError("inverse transpose is not integral; input is not an isometry")
        git = (num // den) % exponent
        out[s : s + step] = (u @ git.astype(np.int64) @ uinv) % exponent
    return normalize(out, pres.orders)


def image_of_boundary(pres: CokernelPresentation, auts: IsometrySet | np.ndarray) -> np.ndarray:
    """The image of the boundary map, deduplicated and canonically ordered."""
    return canonical_set(boundaries(pres, auts), max(pres.orders, default=1))


def enumerate_boundary_automorphisms(
    form: SplitLinkingForm,
    threads: int = 1,
    max_seconds: float | None = None,
    deadline: float | None = None,
) -> np.ndarray:
    """All automorphisms of the split linking form, canonically ordered."""
    found = search_isometries(form, form, threads=threads, max_seconds=max_seconds, deadline=deadline)
    return canonical_set(found, max(form.orders, default=1))


def brute_force_automorphisms(form: SplitLinkingForm) -> np.ndarray:
    """Oracle: test every normalized class matrix against b and nu on all of T x T."""
    orders = form.orders
    k = len(orders)
    if k == 0:
        return np.zeros((1, 0, 0), dtype=np.int64)
    choices = []
    for i, di in enumerate(orders):
        for j, dj in enumerate(orders):
            step = di // math.gcd(di, dj)
            choices.append(np.arange(0, di, step, dtype=np.int64))
    grids = np.meshgrid(*choices, indexing="ij")
    mats = np.stack([g.ravel() for g in grids], axis=1).reshape(-1, k, k)
    mats = mats[invertible_mask(mats, orders)]
    pts = elements(orders)
    denom = common_denominator(form)
    bm, rm = integer_tables(form, denom)
    d = np.array(orders, dtype=np.int64)
    nu0 = np.einsum("ni,ij,nj->n", pts, rm, pts) % denom
    b0 = (pts @ bm @ pts.T) % denom
    keep = np.zeros(len(mats), dtype=bool)
    for n, m in enumerate(mats):
        img = (pts @ m.T) % d
        keep[n] = (
            (np.einsum("ni,ij,nj->n", img, rm, img) % denom == nu0).all()
            and ((img @ bm @ img.T) % denom == b0).all()
        )
    return canonical_set(mats[keep], max(orders))


def is_subset(small: np.ndarray, big: np.ndarray, bound: int) -> bool:
    if len(small) == 0:
        return True
    return bool(np.isin(keys(small, bound), keys(big, bound)).all())


def is_subgroup(mats: np.ndarray, orders: Sequence[int]) -> bool:
    """Closure under composition and inverses, plus identity, for a finite set."""
    k = len(orders)
    bound = max(orders, default=1)
    if k == 0:
        return len(mats) == 1
    known = np.sort(keys(mats, bound))
    ident = np.eye(k, dtype=np.int64)[None]
    if not np.isin(keys(ident, bound), known).all():
        return False
    for f in mats:
        prods = compose(f[None], mats, orders)
        if not np.isin(keys(prods, bound), known).all():
            return False
    # a finite set of automorphisms closed under composition is a group
    return bool(invertible_mask(mats, orders).all())


def double_coset_count(aut: np.ndarray, image: np.ndarray, orders: Sequence[int]) -> int:
    """Number of orbits of Im x Im acting on Aut by (h, g) . f = h f g^-1.

    Labels the left cosets f Im, then merges cosets joined by left
    multiplication with elements of Im.
    """
    bound = max(orders, default=1)
    if len(orders) == 0:
        return 1
    akeys = keys(aut, bound)
    order = np.argsort(akeys)
    sorted_keys = akeys[order]

    def locate(mats):
        pos = np.searchsorted(sorted_keys, keys(mats, bound))
        return order[pos]

    labels = np.full(len(aut), -1, dtype=np.int64)
    reps = []
    while (labels < 0).any():
        f = aut[int(np.argmax(labels < 0))]
        labels[locate(compose(f[None], image, orders))] = len(reps)
        reps.append(f)
    parent = list(range(len(reps)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c, f in enumerate(reps):
        hit = np.unique(labels[locate(compose(image, f[None], orders))])
        for other in hit:
            ra, rb = find(c), find(int(other))
            if ra != rb:
                parent[ra] = rb
    return len({find(x) for x in range(len(reps))})


@dataclass
class ObstructionReport:
    h: int | str
    sign: str
    orders: list[int]
    aut_v_count: int
    image_count: int
    bdry_aut_count: int
    surjective: bool
    index: int
    baut_trivial: bool
    orbit_count: int | None = None
    sign_reduced: bool = False
    within_theorem_hypothesis: bool = True
    elapsed_seconds: float = 0.0
    threads: int = 1

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "ObstructionReport":
        return cls(**d)


@dataclass
class ObstructionResult:
    """A report together with the groups it was computed from."""

    report: ObstructionReport
    presentation: CokernelPresentation
    form: SplitLinkingForm
    isometries: IsometrySet = field(repr=False)
    image: np.ndarray = field(repr=False)
    automorphisms: np.ndarray = field(repr=False)


def obstruction_report(
    f: QuadFormClass,
    *,
    threads: int | None = None,
    max_seconds: float | None = None,
    compute_orbits: bool = False,
    label: int | str | None = None,
) -> ObstructionResult:
    """Run the full pipeline and decide triviality of the boundary automorphism set.

    A form with negative definite symmetrization is replaced by its
    negative, which has the same boundary automorphism set.
    """
    start = time.monotonic()
    threads = threads or os.cpu_count() or 1
    deadline = None if max_seconds is None else start + max_seconds
    sign_reduced = False
    sym = symmetrize(f)
    work = f
    if sym.definite and not sym.positive:
        work = f.negated()
        sign_reduced = True
    pres, form = boundary_form(work)
    remaining = None if deadline is None else max(deadline - time.monotonic(), 1e-3)
    auts = enumerate_isometries(symmetrize(work), threads=threads, max_seconds=remaining)
    if deadline is not None and time.monotonic() > deadline:
        raise SearchTimeout("time budget exhausted after isometry enumeration")
    image = image_of_boundary(pres, auts)
    bdry = enumerate_boundary_automorphisms(form, threads=threads, deadline=deadline)
    bound = max(pres.orders, default=1)
    if not is_subset(image, bdry, bound):
        raise ArithmeticError("image of the boundary map is not contained in Aut of the boundary form")
    if len(bdry) % len(image):
        raise ArithmeticError("image order does not divide the automorphism group order")
    index = len(bdry) // len(image)
    orbits = double_coset_count(bdry, image, pres.orders) if compute_orbits else None
    h = label if label is not None else f.h
    report = ObstructionReport(
        h=h,
        sign=f.sign,
        orders=list(pres.orders),
        aut_v_count=len(auts),
        image_count=len(image),
        bdry_aut_count=len(bdry),
        surjective=index == 1,
        index=index,
        baut_trivial=index == 1,
        orbit_count=orbits,
        sign_reduced=sign_reduced,
        within_theorem_hypothesis=isinstance(h, int) and 1 <= h <= THEOREM_MAX_GENUS,
        elapsed_seconds=round(time.monotonic() - start, 3),
        threads=threads,
    )
    return ObstructionResult(report, pres, form, auts, image, bdry)
