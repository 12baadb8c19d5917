"""GF(2) linear algebra: bit-packed matrices, rank, and the sign-system solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import shape_block_offsets, shape_coords

WORD = 64


@dataclass
class GF2Matrix:
    """A binary matrix packed row-major into uint64 words (LSB first)."""

    nrows: int
    ncols: int
    words: np.ndarray

    @classmethod
    def zeros(cls, nrows, ncols):
        nwords = max(1, (ncols + WORD - 1) // WORD)
        return cls(nrows, ncols, np.zeros((nrows, nwords), dtype=np.uint64))

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr)
        m = cls.zeros(arr.shape[0], arr.shape[1])
        for i in range(arr.shape[0]):
            for j in range(arr.shape[1]):
                if arr[i, j]:
                    m.set(i, j)
        return m

    def to_dense(self):
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for j in range(self.ncols):
            w, b = divmod(j, WORD)
            out[:, j] = (self.words[:, w] >> np.uint64(b)) & np.uint64(1)
        return out

    def copy(self):
        return GF2Matrix(self.nrows, self.ncols, self.words.copy())

    def get(self, i, j):
        w, b = divmod(j, WORD)
        return int((self.words[i, w] >> np.uint64(b)) & np.uint64(1))

    def set(self, i, j, value=1):
        w, b = divmod(j, WORD)
        if value:
            self.words[i, w] |= np.uint64(1) << np.uint64(b)
        else:
            self.words[i, w] &= ~(np.uint64(1) << np.uint64(b))

    def mul_vector(self, bits):
        """Matrix-vector product over GF(2); `bits` is a 0/1 vector."""
        bits = np.asarray(bits).reshape(-1)
        if bits.size != self.ncols:
            raise ValueError("vector length mismatch")
        packed = np.zeros(self.words.shape[1], dtype=np.uint64)
        for j in np.nonzero(bits)[0]:
            w, b = divmod(int(j), WORD)
            packed[w] |= np.uint64(1) << np.uint64(b)
        anded = self.words & packed
        out = np.zeros(self.nrows, dtype=np.uint8)
        for w in range(anded.shape[1]):
            col = anded[:, w]
            # word-wise parity
            col = col ^ (col >> np.uint64(32))
            col = col ^ (col >> np.uint64(16))
            col = col ^ (col >> np.uint64(8))
            col = col ^ (col >> np.uint64(4))
            col = col ^ (col >> np.uint64(2))
            col = col ^ (col >> np.uint64(1))
            out ^= (col & np.uint64(1)).astype(np.uint8)
        return out


@dataclass
class GF2SolveResult:
    """Outcome of a gauge-fixed GF(2) solve."""

    status: str  # "unique-up-to-gauge" | "inconsistent" | "underdetermined"
    solution: np.ndarray | None
    rank: int


def indicator_vector(alpha, shape):
    """Indicator bits of a tuple: one 1 inside each axis block."""
    shape.check_tuple(alpha)
    out = np.zeros(shape.num_coords, dtype=np.uint8)
    for k, (c, off) in enumerate(zip(alpha, shape.block_offsets)):
        out[off + int(c) - 1] = 1
    return out


def build_indicator_matrix(mask):
    """Stack indicator rows for the mask entries in canonical order."""
    if mask.size == 0:
        raise ValueError("mask is empty")
    shape = mask.shape
    n = shape.num_coords
    m = GF2Matrix.zeros(mask.size, n)
    offs = shape.block_offsets
    for i, tup in enumerate(mask.entries):
        for k, c in enumerate(tup):
            m.set(i, offs[k] + int(c) - 1)
    return m


def gf2_rank(m):
    """Rank over GF(2) by word-packed Gaussian elimination."""
    if m.nrows == 0:
        return 0
    if m.ncols <= WORD:
        return int(_kernels.gf2_rank_words(m.words[:, 0].copy(), m.ncols))
    work = m.words.copy()
    rank = 0
    for col in range(m.ncols):
        w, b = divmod(col, WORD)
        bit = np.uint64(1) << np.uint64(b)
        rows = np.nonzero(work[rank:, w] & bit)[0]
        if rows.size == 0:
            continue
        p = rank + int(rows[0])
        if p != rank:
            work[[rank, p]] = work[[p, rank]]
        hit = np.nonzero(work[:, w] & bit)[0]
        hit = hit[hit != rank]
        if hit.size:
            work[hit] ^= work[rank]
        rank += 1
        if rank == m.nrows:
            break
    return rank


def unique_recovery(mask):
    """True when the indicator matrix has GF(2) rank n - d + 1."""
    if mask.size == 0:
        raise ValueError("mask is empty")
    shape = mask.shape
    target = shape.num_coords - shape.ndim + 1
    if shape.num_coords <= WORD:
        rank = int(
            _kernels.indicator_rank(
                shape_coords(shape),
                mask.cells,
                shape_block_offsets(shape),
                shape.num_coords,
            )
        )
    else:
        rank = gf2_rank(build_indicator_matrix(mask))
    return rank == target


def gf2_solve(m, rhs, shape):
    """Solve m z = rhs over GF(2) with the scaling gauge fixed.

    The gauge pins the variable of the first coordinate of every axis block
    except the first to zero.  The canonical solution additionally zeroes any
    remaining free variables.
    """
    rhs = np.asarray(rhs).reshape(-1).astype(np.uint8) & 1
    if rhs.size != m.nrows:
        raise ValueError("rhs length must equal the number of rows")
    n = shape.num_coords
    if m.ncols != n:
        raise ValueError("matrix width must equal the shape's coordinate count")
    gauge = {off for off in shape.block_offsets[1:]}
    keep = [j for j in range(n) if j not in gauge]
    dense = m.to_dense()
    a = np.concatenate([dense[:, keep], rhs[:, None]], axis=1).astype(np.uint8)
    ncols = len(keep)
    row = 0
    pivot_cols = []
    for col in range(ncols):
        hit = np.nonzero(a[row:, col])[0]
        if hit.size == 0:
            continue
        p = row + int(hit[0])
        if p != row:
            a[[row, p]] = a[[p, row]]
        others = np.nonzero(a[:, col])[0]
        others = others[others != row]
        if others.size:
            a[others] ^= a[row]
        pivot_cols.append(col)
        row += 1
        if row == a.shape[0]:
            break
    # rows with empty left part but rhs 1 mark inconsistency
    if row < a.shape[0]:
        tail = a[row:]
        if np.any((tail[:, :-1].sum(axis=1) == 0) & (tail[:, -1] == 1)):
            return GF2SolveResult("inconsistent", None, gf2_rank(m))
    reduced = np.zeros(ncols, dtype=np.uint8)
    for r, col in enumerate(pivot_cols):
        reduced[col] = a[r, -1]
    z = np.zeros(n, dtype=np.uint8)
    for col, j in enumerate(keep):
        z[j] = reduced[col]
    rank = gf2_rank(m)
    target = shape.num_coords - shape.ndim + 1
    status = "unique-up-to-gauge" if rank == target else "underdetermined"
    return GF2SolveResult(status, z, rank)
