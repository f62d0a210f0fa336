"""GF(2) linear algebra on two representations.

Symbolic propagation uses Python ints as bit rows (bit ``j`` = column ``j``).
The oracle uses dense ``uint8`` numpy matrices so it shares no code path
with the symbolic side.
"""

from __future__ import annotations

from typing import Hashable, Iterable

import numpy as np


def popcount(x: int) -> int:
    return bin(x).count("1")


def mask_bits(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


class XorBasis:
    """Incremental row-echelon basis over GF(2) whose rows carry XOR tags.

    A tag is a frozenset; combining rows combines tags by symmetric
    difference, so ``reduce`` also reports which inserted rows sum to the
    reduced vector.
    """

    def __init__(self):
        self._rows: dict[int, tuple[int, frozenset]] = {}

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, vec: int) -> tuple[int, frozenset]:
        tag: frozenset = frozenset()
        while vec:
            top = vec.bit_length() - 1
            row = self._rows.get(top)
            if row is None:
                break
            vec ^= row[0]
            tag ^= row[1]
        return vec, tag

    def _full_reduce(self, vec: int) -> tuple[int, frozenset]:
        # keep reducing below the leading bit too, so the remainder is canonical
        tag: frozenset = frozenset()
        out = 0
        while vec:
            top = vec.bit_length() - 1
            row = self._rows.get(top)
            if row is None:
                out |= 1 << top
                vec ^= 1 << top
            else:
                vec ^= row[0]
                tag ^= row[1]
        return out, tag

    def add(self, vec: int, tag: Iterable[Hashable] = ()) -> bool:
        """Insert a row; returns False if it was already in the span."""
        rest, acc = self.reduce(vec)
        if not rest:
            return False
        self._rows[rest.bit_length() - 1] = (rest, acc ^ frozenset(tag))
        return True

    def express(self, vec: int) -> frozenset | None:
        """Tag combination equal to ``vec``, or None if outside the span."""
        rest, tag = self.reduce(vec)
        return None if rest else tag

    def contains(self, vec: int) -> bool:
        return not self.reduce(vec)[0]

    def copy(self) -> "XorBasis":
        other = XorBasis()
        other._rows = dict(self._rows)
        return other


def rank_int(rows: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


def rcef_key(columns: list[int]) -> tuple[int, ...]:
    """Canonical form of the span of ``columns`` (reduced echelon basis)."""
    basis: dict[int, int] = {}
    for v in columns:
        for top in sorted(basis, reverse=True):
            if v >> top & 1:
                v ^= basis[top]
        if v:
            top = v.bit_length() - 1
            for k in basis:
                if basis[k] >> top & 1:
                    basis[k] ^= v
            basis[top] = v
    return tuple(sorted(basis.values()))


# -- dense numpy side ---------------------------------------------------------


def rank_dense(mat: np.ndarray) -> int:
    """Rank of a 0/1 matrix over GF(2) by Gaussian elimination."""
    a = (np.asarray(mat, dtype=np.uint8) & 1).copy()
    if a.ndim != 2 or a.size == 0:
        return 0
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        below = np.nonzero(a[:, c])[0]
        below = below[below != r]
        a[below] ^= a[r]
        r += 1
    return r


def shift_matrix(q: int, s: int) -> np.ndarray:
    """``q x q`` down-shift by ``s`` levels: ``(S x)[i] = x[i - s]``."""
    return np.eye(q, k=-s, dtype=np.uint8) if q else np.zeros((0, 0), np.uint8)
