"""Mask propagation closures (GS / S / SR), axis connectivity, and weights.

The closures are least fixpoints of local deduction rules.  Each closure
returns a certificate trace: for every cell added, the witnessing triple that
forced it (see the kernel docstrings for the role of each witness).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    Shape,
    shape_coords,
    shape_dims_array,
    shape_strides,
)
from .gf2 import unique_recovery


@dataclass(frozen=True)
class PropagatedSet:
    """Closure of a mask under one of the propagation rules."""

    shape: Shape
    members: frozenset
    trace: tuple  # ((added_tuple, (w1, w2, w3)), ...) in addition order

    @property
    def complete(self):
        return len(self.members) == self.shape.num_cells


@dataclass(frozen=True)
class ConditionProfile:
    unique: bool
    gs: bool
    s: bool
    sr: bool
    a: bool

    def as_dict(self):
        return {
            "unique": self.unique,
            "gs": self.gs,
            "s": self.s,
            "sr": self.sr,
            "a": self.a,
        }


@dataclass(frozen=True)
class WeightVector:
    """Diagonal reweighting produced by the layered square propagation.

    Cells of the restricted closure keep weight 1; a cell first reached in
    layer L of the unrestricted square propagation gets weight theta**L.
    """

    shape: Shape
    w: np.ndarray
    layers: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        layers = np.array(self.layers, dtype=np.int64).reshape(-1)
        if w.size != self.shape.num_cells or layers.size != self.shape.num_cells:
            raise ValueError("weight arrays must cover every cell")
        if np.any(w <= 0) or np.any(w > 1):
            raise ValueError("weights must lie in (0, 1]")
        w.setflags(write=False)
        layers.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "layers", layers)


def _seed_member(mask):
    member = np.zeros(mask.shape.num_cells, dtype=np.uint8)
    member[mask.cells] = 1
    return member


def _run_closure(mask, kernel, with_omega=False):
    shape = mask.shape
    coords = shape_coords(shape)
    strides = shape_strides(shape)
    member = _seed_member(mask)
    trace = np.zeros((shape.num_cells, 4), dtype=np.int64)
    if with_omega:
        cnt, nadd = kernel(coords, strides, mask.cells, member, trace)
    else:
        cnt, nadd = kernel(coords, strides, member, trace)
    members = frozenset(
        shape.tuple_at(int(c)) for c in np.nonzero(member)[0]
    )
    steps = tuple(
        (
            shape.tuple_at(int(trace[i, 0])),
            (
                shape.tuple_at(int(trace[i, 1])),
                shape.tuple_at(int(trace[i, 2])),
                shape.tuple_at(int(trace[i, 3])),
            ),
        )
        for i in range(nadd)
    )
    return PropagatedSet(shape, members, steps)


def propagate_gs(mask):
    """Closure under the generalized-square rule."""
    return _run_closure(mask, _kernels.closure_gs)


def propagate_s(mask):
    """Closure under the square rule (all three witnesses in the closure)."""
    return _run_closure(mask, _kernels.closure_s)


def propagate_sr(mask):
    """Closure under the restricted square rule (pair anchors in the mask)."""
    return _run_closure(mask, _kernels.closure_sr, with_omega=True)


def a_propagation(mask, anchored=False):
    """True when one connected component of the mask covers every axis value.

    Cells are adjacent when they agree in exactly d - 1 coordinates.  With
    `anchored`, only the component of the lexicographically first observation
    is examined; that is the convention behind the published mask tables and
    coincides with the plain condition at minimal cardinality and for d = 2.
    """
    if mask.size == 0:
        return False
    root = _kernels.axis_component_root(
        shape_coords(mask.shape), mask.cells, shape_dims_array(mask.shape),
        1 if anchored else 0,
    )
    return int(root) >= 0


def a_propagation_witness(mask):
    """A strongly connected ordering of a covering component, or None."""
    if mask.size == 0:
        return None
    shape = mask.shape
    root = int(
        _kernels.axis_component_root(
            shape_coords(shape), mask.cells, shape_dims_array(shape), 0
        )
    )
    if root < 0:
        return None
    ents = mask.entries
    m = len(ents)

    def adjacent(i, j):
        return sum(a != b for a, b in zip(ents[i], ents[j])) == 1

    # collect the component containing `root` by BFS, which is already a
    # valid ordering (every element touches an earlier one)
    seen = {root}
    order = [root]
    frontier = [root]
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(m):
                if j not in seen and adjacent(i, j):
                    seen.add(j)
                    order.append(j)
                    nxt.append(j)
        frontier = nxt
    return [ents[i] for i in order]


def condition_profile(mask, anchored_a=False):
    """All five mask conditions; enforces the monotone implication chain."""
    if mask.size == 0:
        return ConditionProfile(False, False, False, False, False)
    flags = _profile_cells(mask.shape, mask.cells, anchored_a=anchored_a)
    return ConditionProfile(*flags)


def _profile_cells(shape, cells, anchored_a=False):
    """(unique, gs, s, sr, a) for the cells of one mask; hot-loop friendly."""
    coords = shape_coords(shape)
    strides = shape_strides(shape)
    dims = shape_dims_array(shape)
    N = shape.num_cells
    n = shape.num_coords
    trace = np.zeros((N, 4), dtype=np.int64)

    member = np.zeros(N, dtype=np.uint8)
    member[cells] = 1
    gs = _kernels.closure_gs(coords, strides, member, trace)[0] == N

    s = False
    sr = False
    if gs:
        member = np.zeros(N, dtype=np.uint8)
        member[cells] = 1
        s = _kernels.closure_s(coords, strides, member, trace)[0] == N
        if s:
            member = np.zeros(N, dtype=np.uint8)
            member[cells] = 1
            sr = (
                _kernels.closure_sr(coords, strides, cells, member, trace)[0] == N
            )

    a = False
    if sr:
        a = (
            int(
                _kernels.axis_component_root(
                    coords, cells, dims, 1 if anchored_a else 0
                )
            )
            >= 0
        )

    if gs:
        unique = True  # implied by the chain; checked in tests
    else:
        if n <= 64:
            rank = int(
                _kernels.indicator_rank(
                    coords, np.asarray(cells, dtype=np.int64),
                    _offsets(shape), n
                )
            )
            unique = rank == n - shape.ndim + 1
        else:
            from .core import Mask

            unique = unique_recovery(Mask.from_cells(shape, cells))

    flags = (unique, gs, s, sr, a)
    # Thm-3.1 chain: a => sr => s => gs => unique
    if (flags[4] and not flags[3]) or (flags[3] and not flags[2]) or (
        flags[2] and not flags[1]
    ) or (flags[1] and not flags[0]):
        raise RuntimeError(f"propagation chain violated for cells {cells}: {flags}")
    return flags


def _offsets(shape):
    from .core import shape_block_offsets

    return shape_block_offsets(shape)


def generate_weights(mask, theta):
    """Layered weights for the reweighted relaxation.

    Requires square propagation to hold; otherwise the layering never reaches
    the full grid and the construction is undefined.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie strictly between 0 and 1")
    shape = mask.shape
    coords = shape_coords(shape)
    strides = shape_strides(shape)
    N = shape.num_cells

    sr = propagate_sr(mask)
    member = np.zeros(N, dtype=np.uint8)
    for t in sr.members:
        member[shape.linear_index(t)] = 1

    w = np.ones(N, dtype=np.float64)
    layers = np.zeros(N, dtype=np.int64)
    layer = 0
    while member.sum() < N:
        frontier = np.zeros(N, dtype=np.uint8)
        added = _kernels.square_step(coords, strides, member, frontier)
        if added == 0:
            raise ValueError(
                "square propagation does not hold for this mask; "
                "weight generation would not terminate"
            )
        layer += 1
        idx = np.nonzero(frontier)[0]
        w[idx] = theta**layer
        layers[idx] = layer
        member[idx] = 1
    return WeightVector(shape, w, layers)
