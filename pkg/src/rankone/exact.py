"""Exact rank-one completion via the log-magnitude and sign linear systems."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    DenseTensor,
    RankOneFactors,
    Shape,
    count_squares,
    enumerate_squares,
    expand,
    shape_coords,
)
from .gf2 import build_indicator_matrix, gf2_rank, gf2_solve

log = logging.getLogger(__name__)

LOG_SYSTEM_TOL = 1e-8


@dataclass
class ExactCompletionResult:
    """Outcome of exact completion: unique, infeasible, or non-unique."""

    status: str  # "unique" | "infeasible" | "non-unique"
    tensor: DenseTensor | None
    factors: RankOneFactors | None
    residual: float
    rank: int
    rank_target: int


def _real_indicator(mask):
    return build_indicator_matrix(mask).to_dense().astype(np.float64)


def complete_exact(obs, log_tol=LOG_SYSTEM_TOL):
    """Complete a rank-one tensor from exact nonzero observations.

    Magnitudes come from the least-squares solution of the log system with
    the scaling gauge fixed (first entry of every factor but the first pinned
    to magnitude 1); signs come from the GF(2) system under the same gauge.
    """
    mask = obs.mask
    if mask.size == 0:
        raise ValueError("cannot complete from an empty mask")
    obs.require_nonzero()
    shape = mask.shape
    n = shape.num_coords
    d = shape.ndim
    target = n - d + 1

    mat = build_indicator_matrix(mask)
    rank = gf2_rank(mat)

    # log-magnitude system with gauge columns removed
    v_real = _real_indicator(mask)
    gauge_cols = list(shape.block_offsets[1:])
    keep = [j for j in range(n) if j not in gauge_cols]
    rhs = np.log(np.abs(obs.values))
    y_red, *_ = np.linalg.lstsq(v_real[:, keep], rhs, rcond=None)
    log_residual = float(np.max(np.abs(v_real[:, keep] @ y_red - rhs)))
    log_consistent = log_residual <= log_tol * (1.0 + float(np.max(np.abs(rhs))))

    # sign system over GF(2)
    sign_rhs = (obs.values < 0).astype(np.uint8)
    sign_result = gf2_solve(mat, sign_rhs, shape)

    if not log_consistent or sign_result.status == "inconsistent":
        return ExactCompletionResult(
            "infeasible", None, None, log_residual, rank, target
        )
    if rank < target:
        return ExactCompletionResult(
            "non-unique", None, None, log_residual, rank, target
        )

    y = np.zeros(n)
    for col, j in zip(keep, range(len(keep))):
        y[col] = y_red[j]
    z = sign_result.solution
    factors = []
    for k, off in enumerate(shape.block_offsets):
        block = slice(off, off + shape.dims[k])
        mag = np.exp(y[block])
        sgn = 1.0 - 2.0 * z[block].astype(np.float64)
        factors.append(mag * sgn)
    factors = RankOneFactors(tuple(factors))
    tensor = expand(factors)
    residual = float(np.max(np.abs(tensor.values[mask.cells] - obs.values)))
    return ExactCompletionResult("unique", tensor, factors, residual, rank, target)


def verify_rank_one(tensor, tol=1e-9, max_checks=200_000, seed=0):
    """Check the quadratic square identities of a dense tensor.

    All squares are checked when their count fits `max_checks`; otherwise a
    seeded sample of that many squares is drawn and the count logged.  Each
    identity is compared with a mixed absolute/relative tolerance.
    """
    shape = tensor.shape
    vals = tensor.values
    total = count_squares(shape)

    def holds(a1, a2, a3, a4):
        lhs = vals[shape.linear_index(a1)] * vals[shape.linear_index(a2)]
        rhs = vals[shape.linear_index(a3)] * vals[shape.linear_index(a4)]
        return abs(lhs - rhs) <= tol * (1.0 + abs(lhs) + abs(rhs))

    if total <= max_checks:
        for sq in enumerate_squares(shape, budget=max(total, 1)):
            if not holds(*sq.pair_a, *sq.pair_b):
                return False
        return True

    log.info("sampling %d of %d squares for the rank-one check", max_checks, total)
    rng = np.random.default_rng(seed)
    coords = shape_coords(shape)
    N, d = coords.shape
    checked = 0
    while checked < max_checks:
        i, j = rng.integers(0, N, size=2)
        if i == j:
            continue
        ti = coords[i]
        tj = coords[j]
        diff = [k for k in range(d) if ti[k] != tj[k]]
        if len(diff) < 2:
            continue
        rest = diff[1:]
        bits = int(rng.integers(1, 1 << len(rest)))
        t3 = list(ti)
        t4 = list(tj)
        for b, k in enumerate(rest):
            if bits & (1 << b):
                t3[k], t4[k] = t4[k], t3[k]
        if not holds(tuple(ti), tuple(tj), tuple(t3), tuple(t4)):
            return False
        checked += 1
    return True
