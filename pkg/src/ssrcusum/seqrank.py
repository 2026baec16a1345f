"""Signed sequential ranks of a stream of observations.

The sequential rank of ``x_i`` is the number of ``|x_1|, ..., |x_i|`` that are
less than or equal to ``|x_i|`` (so ties count towards the rank and the first
observation always has rank 1).  A zero observation gets sign 0.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numba
import numpy as np
from sortedcontainers import SortedList


class SignedRank(NamedTuple):
    sign: int
    rank: int
    index: int


class RankAccumulator:
    """Streaming multiset of magnitudes answering sequential-rank queries.

    Backed by a ``SortedList``, so ``push`` costs ``O(log i)`` amortized.
    Not safe for concurrent mutation; use one accumulator per stream.
    """

    def __init__(self):
        self._mags = SortedList()
        self.zeros = 0

    @property
    def count(self) -> int:
        return len(self._mags)

    def __len__(self) -> int:
        return len(self._mags)

    def push(self, x: float) -> SignedRank:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"observation must be finite, got {x!r}")
        m = abs(x)
        self._mags.add(m)
        rank = self._mags.bisect_right(m)
        if x > 0:
            sign = 1
        elif x < 0:
            sign = -1
        else:
            sign = 0
            self.zeros += 1
        return SignedRank(sign, rank, len(self._mags))

    def reset(self) -> "RankAccumulator":
        self._mags.clear()
        self.zeros = 0
        return self


@numba.njit(cache=True)
def _ranks_from_order(mags, order):
    n = mags.shape[0]
    # position of each element in sorted order, ties share their highest slot
    pos = np.empty(n, dtype=np.int64)
    k = n - 1
    while k >= 0:
        top = k
        while k > 0 and mags[order[k - 1]] == mags[order[top]]:
            k -= 1
        for m in range(k, top + 1):
            pos[order[m]] = top + 1
        k -= 1
    tree = np.zeros(n + 1, dtype=np.int64)
    ranks = np.empty(n, dtype=np.int64)
    for i in range(n):
        p = pos[i]
        while p <= n:
            tree[p] += 1
            p += p & (-p)
        p = pos[i]
        c = 0
        while p > 0:
            c += tree[p]
            p -= p & (-p)
        ranks[i] = c
    return ranks


def sequential_ranks(xs) -> tuple[np.ndarray, np.ndarray]:
    """Batch version of repeated ``push``: returns ``(signs, ranks)`` arrays.

    ``O(n log n)`` via a Fenwick tree over the sorted positions of ``|x|``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1:
        raise ValueError("expected a 1-d array")
    if not np.all(np.isfinite(xs)):
        raise ValueError("observations must be finite")
    mags = np.abs(xs)
    order = np.argsort(mags, kind="stable")
    ranks = _ranks_from_order(mags, order)
    return np.sign(xs).astype(np.int64), ranks
