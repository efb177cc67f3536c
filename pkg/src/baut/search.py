"""Pruned backtracking for isometries between finite split linking forms.

A homomorphism F from the sum of Z/d_j (source) to the target group is
fixed by its columns F e_j. Column j is drawn from the target elements v
with d_j v = 0 and nu(v) = nu(e_j); the pairing constraints
b(F e_i, F e_j) = b(e_i, e_j) are applied as soon as both columns are
placed. Partial assignments are extended one column at a time in numpy
blocks, and the first column's candidates partition the search into
independent subtrees that can run in worker processes.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .boundary import SplitLinkingForm, common_denominator, elements, integer_tables
from .errors import SearchTimeout

_BLOCK = 1 << 22


def _primes(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _full_rank_mod_p(mats: np.ndarray, p: int) -> np.ndarray:
    """Batched Gaussian elimination over GF(p); True where the square matrix is invertible."""
    m = np.array(mats % p, dtype=np.int64)
    nb, n, _ = m.shape
    ok = np.ones(nb, dtype=bool)
    rows = np.arange(nb)
    table = np.array([pow(x, -1, p) if x else 0 for x in range(p)], dtype=np.int64) if p < 1 << 16 else None
    for c in range(n):
        nz = m[:, c:, c] != 0
        has = nz.any(axis=1)
        ok &= has
        piv = c + nz.argmax(axis=1)
        top = m[rows, c].copy()
        m[rows, c] = m[rows, piv]
        m[rows, piv] = top
        pv = m[:, c, c]
        pinv = table[pv] if table is not None else np.array([pow(int(x), -1, p) if x else 0 for x in pv], dtype=np.int64)
        m[:, c, :] = (m[:, c, :] * pinv[:, None]) % p
        for r in range(c + 1, n):
            f = m[:, r, c]
            m[:, r, :] = (m[:, r, :] - f[:, None] * m[:, c, :]) % p
    return ok


def invertible_mask(mats: np.ndarray, orders) -> np.ndarray:
    """Which endomorphism matrices of the sum of Z/d_i are automorphisms.

    Uses the induced map on T/pT for every prime p dividing the exponent:
    the submatrix on {i : p | d_i}, reduced mod p, must be invertible.
    """
    ok = np.ones(len(mats), dtype=bool)
    if not orders:
        return ok
    exponent = math.lcm(*orders)
    for p in _primes(exponent):
        idx = [i for i, d in enumerate(orders) if d % p == 0]
        sub = mats[:, idx][:, :, idx].astype(np.int64)
        ok &= _full_rank_mod_p(sub, p)
    return ok


class _Problem:
    """Candidate columns and pairing tables for one source/target pair."""

    def __init__(self, src: SplitLinkingForm, dst: SplitLinkingForm):
        self.src, self.dst = src, dst
        denom = common_denominator(src, dst)
        self.denom = denom
        self.pts = elements(dst.orders)
        d2 = np.array(dst.orders, dtype=np.int64)
        bm2, rm2 = integer_tables(dst, denom)
        nu2 = np.einsum("ni,ij,nj->n", self.pts, rm2, self.pts) % denom
        bself2 = np.einsum("ni,ij,nj->n", self.pts, bm2, self.pts) % denom
        bm1, rm1 = integer_tables(src, denom)
        k = src.rank
        self.b_src = bm1 % denom
        nu1 = [int(rm1[j, j]) % denom for j in range(k)]
        self.cands = []
        for j, dj in enumerate(src.orders):
            killed = ((dj * self.pts) % d2 == 0).all(axis=1)
            mask = killed & (nu2 == nu1[j]) & (bself2 == self.b_src[j, j])
            self.cands.append(np.nonzero(mask)[0])
        # pairing of every target element with the candidates of column j
        self.bcols = [
            ((self.pts @ bm2 @ self.pts[c].T) % denom).astype(np.int32) for c in self.cands
        ]


def _extend(prob: _Problem, first: int, deadline) -> np.ndarray:
    k = prob.src.rank
    partial = np.array([[first]], dtype=np.int32)
    for col in range(1, k):
        if deadline is not None and time.monotonic() > deadline:
            raise SearchTimeout("boundary form search exceeded its time budget")
        cand = prob.cands[col]
        table = prob.bcols[col]
        if len(partial) == 0 or len(cand) == 0:
            return np.zeros((0, k), dtype=np.int32)
        pieces = []
        step = max(1, _BLOCK // len(cand))
        for s in range(0, len(partial), step):
            blk = partial[s : s + step]
            ok = np.ones((len(blk), len(cand)), dtype=bool)
            for i in range(col):
                ok &= table[blk[:, i]] == prob.b_src[i, col]
            pi, ci = np.nonzero(ok)
            if len(pi):
                pieces.append(np.concatenate([blk[pi], cand[ci][:, None].astype(np.int32)], axis=1))
        if not pieces:
            return np.zeros((0, k), dtype=np.int32)
        partial = np.concatenate(pieces)
    return partial


def _to_matrices(prob: _Problem, idx: np.ndarray) -> np.ndarray:
    # column j of each matrix is the target element idx[:, j]
    return np.ascontiguousarray(prob.pts[idx].transpose(0, 2, 1))


def _injective(prob: _Problem, mats: np.ndarray) -> np.ndarray:
    src_pts = elements(prob.src.orders)
    d2 = np.array(prob.dst.orders, dtype=np.int64)
    out = np.zeros(len(mats), dtype=bool)
    for n, m in enumerate(mats):
        img = (src_pts @ m.T) % d2
        out[n] = len(np.unique(img, axis=0)) == len(src_pts)
    return out


def storage_dtype(bound: int):
    """Smallest unsigned dtype holding normalized entries below ``bound``."""
    for dt in (np.uint8, np.uint16, np.uint32):
        if bound <= np.iinfo(dt).max + 1:
            return dt
    return np.int64


def _finish(prob: _Problem, idx: np.ndarray) -> np.ndarray:
    mats = _to_matrices(prob, idx).astype(storage_dtype(max(prob.dst.orders)))
    if prob.src.orders == prob.dst.orders:
        keep = invertible_mask(mats, prob.src.orders)
    else:
        keep = _injective(prob, mats)
    return mats[keep]


def _worker(args):
    prob, firsts, deadline = args
    k = prob.src.rank
    out = []
    for f in firsts:
        idx = _extend(prob, int(f), deadline)
        if len(idx):
            out.append(_finish(prob, idx))
    if not out:
        return np.zeros((0, prob.dst.rank, k), dtype=storage_dtype(max(prob.dst.orders)))
    return np.concatenate(out)


def search_isometries(
    src: SplitLinkingForm,
    dst: SplitLinkingForm,
    *,
    first_only: bool = False,
    threads: int = 1,
    max_seconds: float | None = None,
    deadline: float | None = None,
) -> np.ndarray:
    """All isometries src -> dst as an (N, k_dst, k_src) int64 array (unsorted).

    With ``first_only`` the search stops at the first isometry found.
    """
    k1, k2 = src.rank, dst.rank
    if src.order != dst.order:
        return np.zeros((0, k2, k1), dtype=np.int64)
    if k1 == 0:
        return np.zeros((1, k2, 0), dtype=np.int64)
    if deadline is None and max_seconds is not None:
        deadline = time.monotonic() + max_seconds
    prob = _Problem(src, dst)
    firsts = list(prob.cands[0])
    if first_only:
        for f in firsts:
            idx = _extend(prob, int(f), deadline)
            if len(idx):
                found = _finish(prob, idx)
                if len(found):
                    return found[:1]
        return np.zeros((0, k2, k1), dtype=storage_dtype(max(dst.orders)))
    if threads <= 1 or len(firsts) < 2:
        return _worker((prob, firsts, deadline))
    chunks = [firsts[i::threads] for i in range(threads)]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(_worker, [(prob, c, deadline) for c in chunks if c]))
    return np.concatenate(parts)


def keys(mats: np.ndarray, bound: int) -> np.ndarray:
    """One sortable byte key per matrix; byte order equals row-major lexicographic order.

    Entries must lie in [0, bound); sets compared by key must share ``bound``.
    """
    mats = np.asarray(mats)
    if mats.size and (mats.min() < 0 or mats.max() >= bound):
        raise ValueError("keys require normalized entries in [0, bound)")
    dt = ">u1" if bound <= 1 << 8 else ">u2" if bound <= 1 << 16 else ">u4" if bound <= 1 << 32 else ">u8"
    flat = np.ascontiguousarray(mats.reshape(len(mats), -1).astype(dt))
    return flat.view(np.dtype((np.void, flat.shape[1] * flat.dtype.itemsize))).ravel()


def canonical_set(mats: np.ndarray, bound: int) -> np.ndarray:
    """Deduplicate and sort normalized matrices lexicographically (row-major)."""
    mats = np.asarray(mats)
    if len(mats) == 0:
        return mats
    if mats[0].size == 0:
        return mats[:1]  # every 0 x 0 matrix is the same one
    _, first = np.unique(keys(mats, bound), return_index=True)
    return mats[first]
