"""Bit-pair-count index algebra for the permutation-reduced density matrix.

A matrix element rho[x, y] of a bit-swap symmetric state depends only on the
four counts (n00, n01, n10, n11) of aligned bit pairs in (x, y).  For fixed q
there are binomial(q + 3, 3) such tuples; they are ranked densely in
descending lexicographic order on (n00, n01, n10), so (q, 0, 0, 0) has rank 0
and (0, 0, 0, q) has the last rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

MAX_QUBITS = 36
MAX_BINOMIAL_N = 2 * MAX_QUBITS


class PairCounts(NamedTuple):
    n00: int
    n01: int
    n10: int
    n11: int

    @property
    def q(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11


class DistanceTriple(NamedTuple):
    d_x0: int
    d_y0: int
    d_xy: int


def check_qubits(q: int, q_max: int = MAX_QUBITS) -> int:
    if int(q) != q or not 1 <= q <= q_max:
        raise ValueError(f"qubit count must be an integer in [1, {q_max}], got {q}")
    return int(q)


@lru_cache(maxsize=None)
def _pascal(n_max: int) -> tuple[tuple[int, ...], ...]:
    rows = [(1,)]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        rows.append((1,) + tuple(prev[k - 1] + prev[k] for k in range(1, n)) + (1,))
    return tuple(rows)


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient from a cached Pascal triangle, 0 <= k <= n <= 72."""
    if not 0 <= n <= MAX_BINOMIAL_N:
        raise ValueError(f"n must lie in [0, {MAX_BINOMIAL_N}], got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n={n}], got {k}")
    return _pascal(MAX_BINOMIAL_N)[n][k]


def state_space_size(q: int) -> int:
    """Number of distinct bit-pair-count tuples, (q+1)(q+2)(q+3)/6."""
    if q < 0:
        raise ValueError("q must be non-negative")
    return (q + 1) * (q + 2) * (q + 3) // 6


def pair_counts(x: int, y: int, q: int) -> PairCounts:
    """Count aligned (0,0), (0,1), (1,0), (1,1) bit pairs of x and y over q bits."""
    q = check_qubits(q)
    if not (0 <= x < 1 << q and 0 <= y < 1 << q):
        raise ValueError(f"x and y must be {q}-bit integers")
    n11 = (x & y).bit_count()
    n10 = (x & ~y).bit_count()
    n01 = (~x & y).bit_count()
    return PairCounts(q - n01 - n10 - n11, n01, n10, n11)


def distances(p: PairCounts) -> DistanceTriple:
    """Hamming distances (x to 0, y to 0, x to y) implied by the pair counts."""
    n00, n01, n10, n11 = p
    return DistanceTriple(n10 + n11, n01 + n11, n01 + n10)


def _c3(a: int) -> int:
    return a * (a - 1) * (a - 2) // 6


def rank(p: PairCounts) -> int:
    """Flat index of a pair-count tuple.

    Equivalent to counting the tuples that precede ``p`` in descending
    lexicographic order on (n00, n01, n10).
    """
    n00, n01, n10, n11 = p
    if min(p) < 0:
        raise ValueError(f"negative pair count in {tuple(p)}")
    a = n01 + n10 + n11
    b = n10 + n11
    return _c3(a + 2) + (b + 1) * b // 2 + n11


def unrank(i: int, q: int) -> PairCounts:
    """Inverse of :func:`rank` for fixed q."""
    size = state_space_size(q)
    if not 0 <= i < size:
        raise IndexError(f"flat index {i} outside [0, {size})")
    t = class_table(q)
    return PairCounts(int(t.n00[i]), int(t.n01[i]), int(t.n10[i]), int(t.n11[i]))


@dataclass(frozen=True)
class ClassTable:
    """Vectorised view of every pair-count tuple for one q, in rank order."""

    q: int
    n00: np.ndarray
    n01: np.ndarray
    n10: np.ndarray
    n11: np.ndarray

    @property
    def size(self) -> int:
        return len(self.n00)

    @property
    def d_x0(self) -> np.ndarray:
        return self.n10 + self.n11

    @property
    def d_y0(self) -> np.ndarray:
        return self.n01 + self.n11

    def flat(self, n00, n01, n10, n11) -> np.ndarray:
        """Vectorised :func:`rank`; entries with any negative count map to -1."""
        n00, n01, n10, n11 = (np.asarray(v, dtype=np.int64) for v in (n00, n01, n10, n11))
        a = n01 + n10 + n11
        b = n10 + n11
        idx = (a + 2) * (a + 1) * a // 6 + (b + 1) * b // 2 + n11
        bad = (n00 < 0) | (n01 < 0) | (n10 < 0) | (n11 < 0)
        return np.where(bad, -1, idx)

    def diagonal_indices(self) -> np.ndarray:
        """Flat indices of (q - d, 0, 0, d) for d = 0..q, i.e. the populations."""
        d = np.arange(self.q + 1)
        return self.flat(self.q - d, 0, 0, d)

    def swapped_indices(self) -> np.ndarray:
        """Flat index of (n00, n10, n01, n11) for each entry (the x <-> y image)."""
        return self.flat(self.n00, self.n10, self.n01, self.n11)


@lru_cache(maxsize=64)
def class_table(q: int) -> ClassTable:
    if q < 0 or q > MAX_QUBITS:
        raise ValueError(f"q must lie in [0, {MAX_QUBITS}], got {q}")
    rows = [
        (n00, n01, n10, q - n00 - n01 - n10)
        for n00 in range(q, -1, -1)
        for n01 in range(q - n00, -1, -1)
        for n10 in range(q - n00 - n01, -1, -1)
    ]
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    arr.flags.writeable = False
    return ClassTable(q, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


@lru_cache(maxsize=None)
def binomial_row(n: int) -> np.ndarray:
    """binomial(n, k) for k = 0..n as float64."""
    return np.array([float(binomial(n, k)) for k in range(n + 1)])
