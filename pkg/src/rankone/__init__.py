"""Rank-one tensor completion: mask analysis, exact solvers, and SDP relaxations."""

from ._kernels import NUMBA_ACTIVE
from .core import (
    DenseTensor,
    Mask,
    ObservedTensor,
    RankOneFactors,
    Shape,
    Square,
    count_squares,
    enumerate_squares,
    expand,
    is_generalized_square,
    is_square,
    restrict,
)
from .gf2 import (
    GF2Matrix,
    GF2SolveResult,
    build_indicator_matrix,
    gf2_rank,
    gf2_solve,
    indicator_vector,
    unique_recovery,
)
from .propagation import (
    ConditionProfile,
    PropagatedSet,
    WeightVector,
    a_propagation,
    a_propagation_witness,
    condition_profile,
    generate_weights,
    propagate_gs,
    propagate_s,
    propagate_sr,
)

__all__ = [
    "NUMBA_ACTIVE",
    "Shape",
    "DenseTensor",
    "Mask",
    "ObservedTensor",
    "RankOneFactors",
    "Square",
    "expand",
    "restrict",
    "is_square",
    "is_generalized_square",
    "enumerate_squares",
    "count_squares",
    "GF2Matrix",
    "GF2SolveResult",
    "indicator_vector",
    "build_indicator_matrix",
    "gf2_rank",
    "gf2_solve",
    "unique_recovery",
    "PropagatedSet",
    "ConditionProfile",
    "WeightVector",
    "propagate_gs",
    "propagate_s",
    "propagate_sr",
    "a_propagation",
    "a_propagation_witness",
    "condition_profile",
    "generate_weights",
]
