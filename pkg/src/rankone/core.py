"""Shapes, index tuples, dense tensors, observation masks, and square combinatorics.

Index tuples are plain Python tuples with 1-based coordinates; flat storage is
row-major with the last axis fastest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np


class SquareBudgetExceeded(RuntimeError):
    """Raised when a square enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class Shape:
    """Tensor dimensions (n_1, ..., n_d)."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(v) for v in self.dims)
        if not dims:
            raise ValueError("a shape needs at least one axis")
        if any(v < 1 for v in dims):
            raise ValueError(f"axis lengths must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)
        strides = [1] * len(dims)
        for k in range(len(dims) - 2, -1, -1):
            strides[k] = strides[k + 1] * dims[k + 1]
        object.__setattr__(self, "_strides", tuple(strides))

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def num_cells(self):
        out = 1
        for v in self.dims:
            out *= v
        return out

    @property
    def num_coords(self):
        """Total factor length: the sum of the axis lengths."""
        return sum(self.dims)

    @property
    def strides(self):
        return self._strides

    @property
    def block_offsets(self):
        """Start offset of each axis block inside an indicator vector."""
        offs = [0] * self.ndim
        for k in range(1, self.ndim):
            offs[k] = offs[k - 1] + self.dims[k - 1]
        return tuple(offs)

    def valid_tuple(self, tup):
        return len(tup) == self.ndim and all(
            1 <= int(c) <= n for c, n in zip(tup, self.dims)
        )

    def check_tuple(self, tup):
        if not self.valid_tuple(tup):
            raise ValueError(f"index tuple {tup} is invalid for shape {self.dims}")

    def linear_index(self, tup):
        self.check_tuple(tup)
        return sum((int(c) - 1) * s for c, s in zip(tup, self._strides))

    def tuple_at(self, idx):
        if not 0 <= idx < self.num_cells:
            raise ValueError(f"linear index {idx} out of range for shape {self.dims}")
        out = []
        for s, n in zip(self._strides, self.dims):
            c, idx = divmod(idx, s)
            out.append(c + 1)
        return tuple(out)

    def iter_tuples(self):
        """All index tuples in row-major (linear) order."""
        return itertools.product(*(range(1, n + 1) for n in self.dims))


@lru_cache(maxsize=None)
def shape_coords(shape):
    """(num_cells, ndim) int64 array of 1-based coordinates in linear order."""
    arr = np.fromiter(
        itertools.chain.from_iterable(shape.iter_tuples()),
        dtype=np.int64,
        count=shape.num_cells * shape.ndim,
    ).reshape(shape.num_cells, shape.ndim)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def shape_strides(shape):
    arr = np.array(shape.strides, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def shape_dims_array(shape):
    arr = np.array(shape.dims, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def shape_block_offsets(shape):
    arr = np.array(shape.block_offsets, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DenseTensor:
    """A dense tensor stored as a flat row-major float array."""

    shape: Shape
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.shape.num_cells:
            raise ValueError(
                f"expected {self.shape.num_cells} values for shape "
                f"{self.shape.dims}, got {vals.size}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        return cls(Shape(arr.shape), arr.reshape(-1))

    def as_array(self):
        return self.values.reshape(self.shape.dims)

    def at(self, tup):
        return float(self.values[self.shape.linear_index(tup)])


@dataclass(frozen=True)
class Mask:
    """An observation mask: a canonical, duplicate-free set of index tuples."""

    shape: Shape
    entries: tuple

    def __post_init__(self):
        seen = set()
        ents = []
        for t in self.entries:
            t = tuple(int(c) for c in t)
            self.shape.check_tuple(t)
            if t not in seen:
                seen.add(t)
                ents.append(t)
        ents.sort()
        object.__setattr__(self, "entries", tuple(ents))
        cells = np.array(
            [self.shape.linear_index(t) for t in ents], dtype=np.int64
        ).reshape(-1)
        cells.setflags(write=False)
        object.__setattr__(self, "_cells", cells)

    @classmethod
    def full(cls, shape):
        return cls(shape, tuple(shape.iter_tuples()))

    @classmethod
    def from_cells(cls, shape, cells):
        return cls(shape, tuple(shape.tuple_at(int(c)) for c in cells))

    @property
    def size(self):
        return len(self.entries)

    @property
    def cells(self):
        """Linear cell indices, sorted ascending."""
        return self._cells

    def __contains__(self, tup):
        return tuple(tup) in set(self.entries)

    def is_full(self):
        return self.size == self.shape.num_cells


@dataclass(frozen=True)
class ObservedTensor:
    """Observed values aligned with the entries of a mask."""

    mask: Mask
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.mask.size:
            raise ValueError(
                f"expected {self.mask.size} observed values, got {vals.size}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_pairs(cls, shape, pairs):
        """Build from {index tuple: value}."""
        items = sorted((tuple(t), float(v)) for t, v in dict(pairs).items())
        mask = Mask(shape, tuple(t for t, _ in items))
        return cls(mask, np.array([v for _, v in items]))

    @property
    def shape(self):
        return self.mask.shape

    def value_at(self, tup):
        idx = self.mask.entries.index(tuple(tup))
        return float(self.values[idx])

    def require_nonzero(self):
        if self.mask.size and not np.all(self.values != 0.0):
            raise ValueError("observed values must all be nonzero")


def restrict(tensor, mask):
    """Observe `tensor` on `mask`."""
    if tensor.shape != mask.shape:
        raise ValueError("tensor and mask shapes differ")
    return ObservedTensor(mask, tensor.values[mask.cells])


@dataclass(frozen=True)
class RankOneFactors:
    """One factor vector per axis; the tensor is their outer product."""

    factors: tuple

    def __post_init__(self):
        fs = tuple(np.array(f, dtype=np.float64).reshape(-1) for f in self.factors)
        if not fs or any(f.size < 1 for f in fs):
            raise ValueError("each axis needs a nonempty factor vector")
        for f in fs:
            f.setflags(write=False)
        object.__setattr__(self, "factors", fs)

    @property
    def shape(self):
        return Shape(tuple(f.size for f in self.factors))


def expand(factors):
    """Outer-product expansion of rank-one factors into a dense tensor."""
    if isinstance(factors, RankOneFactors):
        fs = factors.factors
    else:
        fs = tuple(np.asarray(f, dtype=np.float64).reshape(-1) for f in factors)
    full = reduce(np.multiply.outer, fs)
    return DenseTensor(Shape(tuple(f.size for f in fs)), full.reshape(-1))


def is_square(a1, a2, a3, a4):
    """True when (a1,a2) and (a3,a4) are the opposite pairs of a square."""
    a1, a2, a3, a4 = (tuple(a1), tuple(a2), tuple(a3), tuple(a4))
    d = len(a1)
    if any(len(t) != d for t in (a2, a3, a4)):
        raise ValueError("index tuples have mismatched lengths")
    if len({a1, a2, a3, a4}) != 4:
        return False
    for k in range(d):
        if max(a1[k], a2[k]) != max(a3[k], a4[k]):
            return False
        if min(a1[k], a2[k]) != min(a3[k], a4[k]):
            return False
    return True


def is_generalized_square(a1, a2, a3, a4):
    """True when the four distinct tuples have indicator vectors summing to 0."""
    tups = (tuple(a1), tuple(a2), tuple(a3), tuple(a4))
    d = len(tups[0])
    if any(len(t) != d for t in tups):
        raise ValueError("index tuples have mismatched lengths")
    if len(set(tups)) != 4:
        return False
    for k in range(d):
        vals = sorted(t[k] for t in tups)
        if vals[0] != vals[1] or vals[2] != vals[3]:
            return False
    return True


@dataclass(frozen=True)
class Square:
    """A square {a1,a2; a3,a4} in canonical form (sorted pairs, sorted)."""

    pair_a: tuple
    pair_b: tuple

    @classmethod
    def make(cls, a1, a2, a3, a4):
        if not is_square(a1, a2, a3, a4):
            raise ValueError(f"{(a1, a2, a3, a4)} is not a square")
        pa = tuple(sorted((tuple(a1), tuple(a2))))
        pb = tuple(sorted((tuple(a3), tuple(a4))))
        pa, pb = sorted((pa, pb))
        return cls(pa, pb)

    @property
    def tuples(self):
        return (*self.pair_a, *self.pair_b)

    def __iter__(self):
        return iter((self.pair_a, self.pair_b))


def count_squares(shape):
    """Number of distinct squares of `shape`, without enumerating them."""
    dims = shape.dims
    d = len(dims)
    total = 0
    for bits in range(1, 1 << d):
        m = bin(bits).count("1")
        if m < 2:
            continue
        ordered = 1
        for k in range(d):
            n = dims[k]
            ordered *= n * (n - 1) if bits & (1 << k) else n
        total += ordered * ((1 << (m - 1)) - 1)
    return total // 4


def enumerate_squares(shape, budget=10_000_000):
    """All squares of `shape` in canonical form, sorted deterministically.

    Each square is generated from each of its two opposite pairs; duplicates
    collapse through the canonical form.  Refuses shapes whose square count
    exceeds `budget` (large instances use averaged constraints instead).
    """
    total = count_squares(shape)
    if total > budget:
        raise SquareBudgetExceeded(
            f"shape {shape.dims} has {total} squares, over the cap of {budget}"
        )
    coords = shape_coords(shape)
    N, d = coords.shape
    out = set()
    for i in range(N):
        ti = coords[i]
        for j in range(i + 1, N):
            tj = coords[j]
            diff = [k for k in range(d) if ti[k] != tj[k]]
            m = len(diff)
            if m < 2:
                continue
            # Swap every nonempty subset of the differing axes that excludes
            # the first one; the excluded axis pins down one pair per square.
            rest = diff[1:]
            for bits in range(1, 1 << (m - 1)):
                swap = [rest[b] for b in range(m - 1) if bits & (1 << b)]
                t3 = list(ti)
                t4 = list(tj)
                for k in swap:
                    t3[k], t4[k] = t4[k], t3[k]
                out.add(
                    Square.make(tuple(ti), tuple(tj), tuple(t3), tuple(t4))
                )
    return sorted(out, key=lambda s: (s.pair_a, s.pair_b))
