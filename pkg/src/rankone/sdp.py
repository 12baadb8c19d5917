"""Convex relaxations over the bordered moment matrix and an ADMM solver.

The variable is the symmetric (N+1) x (N+1) matrix bordered by 1 and the
vectorized tensor.  Exact problems fix the observed first-row and diagonal
entries; all square identities become entry-equality constraints, which
partition matrix positions into equivalence classes.  The affine projection
is therefore closed form: write the fixed entries and average each class.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .core import (
    DenseTensor,
    ObservedTensor,
    Shape,
    enumerate_squares,
)

DENSE_CAP = 600


@dataclass(frozen=True)
class SolverOptions:
    """ADMM controls; the defaults favor accuracy over speed."""

    tol: float = 1e-7
    eps_psd: float = 1e-7
    max_iters: int = 200_000
    tight_tol: float = 1e-3
    rho: float = 1.0
    over_relax: float = 1.6
    adapt_every: int = 25
    dense_cap: int = DENSE_CAP
    square_budget: int = 10_000_000


@dataclass(frozen=True)
class SdpProblem:
    """One of the three relaxations, with its projection structure prebuilt.

    `fixed_*` hold single-entry constraints (row, col, value) in original
    units; `cls_*` index the entry-equality classes induced by the squares.
    The linear cost splits into a diagonal part, a first-row part (noisy data
    terms), and a constant.
    """

    shape: Shape
    kind: str  # "exact" | "weighted-exact" | "noisy"
    obs: ObservedTensor
    weights: np.ndarray | None
    penalty: float | None
    squares: tuple
    fixed_i: np.ndarray
    fixed_j: np.ndarray
    fixed_v: np.ndarray
    cls_i: np.ndarray
    cls_j: np.ndarray
    cls_id: np.ndarray
    n_classes: int
    cls_counts: np.ndarray
    cost_diag: np.ndarray
    cost_row0: np.ndarray
    const_term: float

    @property
    def side(self):
        return self.shape.num_cells + 1

    def cost_matrix(self):
        """Dense symmetric cost matrix in original units."""
        n1 = self.side
        c = np.zeros((n1, n1))
        c[np.arange(n1), np.arange(n1)] = self.cost_diag
        c[0, 1:] = self.cost_row0
        c[1:, 0] = self.cost_row0
        return c

    def constraint_triplets(self):
        """Affine constraints as ([(row, col, coeff), ...], rhs) tuples.

        Coefficients address upper-triangle entries of the symmetric
        variable.
        """
        out = []
        for i, j, v in zip(self.fixed_i, self.fixed_j, self.fixed_v):
            out.append(([(int(i), int(j), 1.0)], float(v)))
        first = {}
        for i, j, c in zip(self.cls_i, self.cls_j, self.cls_id):
            c = int(c)
            if c not in first:
                first[c] = (int(i), int(j))
            else:
                fi, fj = first[c]
                out.append(
                    ([(fi, fj, 1.0), (int(i), int(j), -1.0)], 0.0)
                )
        return out


@dataclass
class SdpSolution:
    """Solved moment matrix plus solver diagnostics (residuals are scaled)."""

    moment: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str  # "optimal" | "max-iters" | "infeasible"


@dataclass
class RankOneExtraction:
    tensor: DenseTensor
    tight: bool
    eigen_ratio: float
    recovery_residual: float


def _equality_classes(shape, squares):
    """Union-find the square identities into entry-position classes."""
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        for p in (x, y):
            if p not in parent:
                parent[p] = p
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[ry] = rx

    def pos(t1, t2):
        a = shape.linear_index(t1) + 1
        b = shape.linear_index(t2) + 1
        return (min(a, b), max(a, b))

    for sq in squares:
        union(pos(*sq.pair_a), pos(*sq.pair_b))

    groups = {}
    for p in parent:
        groups.setdefault(find(p), []).append(p)
    cls_i, cls_j, cls_id = [], [], []
    counts = []
    cid = 0
    for root in sorted(groups):
        members = sorted(groups[root])
        if len(members) < 2:
            continue
        for (i, j) in members:
            cls_i.append(i)
            cls_j.append(j)
            cls_id.append(cid)
        counts.append(len(members))
        cid += 1
    return (
        np.array(cls_i, dtype=np.int64),
        np.array(cls_j, dtype=np.int64),
        np.array(cls_id, dtype=np.int64),
        cid,
        np.array(counts, dtype=np.float64),
    )


def _observation_fixed(shape, obs):
    fi, fj, fv = [0], [0], [1.0]
    for tup, val in zip(obs.mask.entries, obs.values):
        a = shape.linear_index(tup) + 1
        fi.append(0)
        fj.append(a)
        fv.append(float(val))
        fi.append(a)
        fj.append(a)
        fv.append(float(val) ** 2)
    return (
        np.array(fi, dtype=np.int64),
        np.array(fj, dtype=np.int64),
        np.array(fv, dtype=np.float64),
    )


def build_sdp_exact(obs, weights=None, square_budget=10_000_000):
    """Trace (or weighted-diagonal) relaxation with hard data constraints."""
    obs.require_nonzero()
    shape = obs.shape
    squares = tuple(enumerate_squares(shape, budget=square_budget))
    fi, fj, fv = _observation_fixed(shape, obs)
    cls = _equality_classes(shape, squares)
    n1 = shape.num_cells + 1
    diag = np.ones(n1)
    diag[0] = 0.0
    w = None
    if weights is not None:
        w = np.array(weights.w if hasattr(weights, "w") else weights, dtype=np.float64)
        if w.size != shape.num_cells:
            raise ValueError("weight vector must cover every cell")
        diag[1:] = w
    kind = "exact" if w is None else "weighted-exact"
    return SdpProblem(
        shape=shape,
        kind=kind,
        obs=obs,
        weights=w,
        penalty=None,
        squares=squares,
        fixed_i=fi,
        fixed_j=fj,
        fixed_v=fv,
        cls_i=cls[0],
        cls_j=cls[1],
        cls_id=cls[2],
        n_classes=cls[3],
        cls_counts=cls[4],
        cost_diag=diag,
        cost_row0=np.zeros(shape.num_cells),
        const_term=0.0,
    )


def build_sdp_noisy(obs, C, square_budget=10_000_000):
    """Penalized relaxation: data terms move into the linear objective."""
    if C <= 0:
        raise ValueError("the penalty constant must be positive")
    shape = obs.shape
    squares = tuple(enumerate_squares(shape, budget=square_budget))
    cls = _equality_classes(shape, squares)
    n1 = shape.num_cells + 1
    diag = np.ones(n1)
    diag[0] = 0.0
    row0 = np.zeros(shape.num_cells)
    const = 0.0
    for tup, val in zip(obs.mask.entries, obs.values):
        a = shape.linear_index(tup)
        diag[a + 1] += C
        row0[a] += -C * float(val)
        const += C * float(val) ** 2
    return SdpProblem(
        shape=shape,
        kind="noisy",
        obs=obs,
        weights=None,
        penalty=float(C),
        squares=squares,
        fixed_i=np.array([0], dtype=np.int64),
        fixed_j=np.array([0], dtype=np.int64),
        fixed_v=np.array([1.0]),
        cls_i=cls[0],
        cls_j=cls[1],
        cls_id=cls[2],
        n_classes=cls[3],
        cls_counts=cls[4],
        cost_diag=diag,
        cost_row0=row0,
        const_term=const,
    )


def _scaled_pieces(problem):
    """Rescale observations so the largest magnitude is 1 (conditioning)."""
    vals = problem.obs.values
    s = float(np.max(np.abs(vals))) if vals.size else 1.0
    if s <= 0:
        s = 1.0
    fv = problem.fixed_v.copy()
    row_mask = problem.fixed_i == 0
    diag_mask = (problem.fixed_i == problem.fixed_j) & (problem.fixed_i > 0)
    corner = (problem.fixed_i == 0) & (problem.fixed_j == 0)
    fv[row_mask & ~corner] /= s
    fv[diag_mask] /= s * s
    row0 = problem.cost_row0 / s
    return s, fv, row0


def _project_affine(m, problem, fv_scaled):
    m[problem.fixed_i, problem.fixed_j] = fv_scaled
    m[problem.fixed_j, problem.fixed_i] = fv_scaled
    if problem.n_classes:
        vals = m[problem.cls_i, problem.cls_j]
        sums = np.bincount(problem.cls_id, weights=vals, minlength=problem.n_classes)
        means = sums / problem.cls_counts
        new = means[problem.cls_id]
        m[problem.cls_i, problem.cls_j] = new
        m[problem.cls_j, problem.cls_i] = new
    return m


def _project_psd(m):
    w, q = scipy.linalg.eigh(m, check_finite=False)
    if w[0] >= 0.0:
        return m
    wc = np.clip(w, 0.0, None)
    out = (q * wc) @ q.T
    return (out + out.T) * 0.5


def solve_sdp(problem, opts=None):
    """Operator-splitting solve: alternate the affine and PSD projections.

    Scaled-dual ADMM with over-relaxation and residual-balanced penalty
    adaptation; deterministic for fixed options.  The observed data is
    normalized internally so its largest magnitude is one and the moment
    matrix is rescaled back before returning.
    """
    opts = opts or SolverOptions()
    n1 = problem.side
    if n1 > opts.dense_cap:
        raise ValueError(
            f"moment side {n1} exceeds the dense solver cap {opts.dense_cap}"
        )
    s, fv_scaled, row0_scaled = _scaled_pieces(problem)
    cost = np.zeros((n1, n1))
    cost[np.arange(n1), np.arange(n1)] = problem.cost_diag
    cost[0, 1:] = row0_scaled
    cost[1:, 0] = row0_scaled

    z = _project_affine(np.zeros((n1, n1)), problem, fv_scaled)
    u = np.zeros((n1, n1))
    rho = opts.rho
    alpha = opts.over_relax
    rp = rd = np.inf
    status = "max-iters"
    it = 0
    for it in range(1, opts.max_iters + 1):
        x = _project_affine(z - u - cost / rho, problem, fv_scaled)
        xr = alpha * x + (1.0 - alpha) * z
        z_new = _project_psd(xr + u)
        u += xr - z_new
        denom = 1.0 + np.linalg.norm(z_new)
        rp = np.linalg.norm(x - z_new) / denom
        rd = rho * np.linalg.norm(z_new - z) / denom
        z = z_new
        if rp <= opts.tol and rd <= opts.tol:
            status = "optimal"
            break
        if it % opts.adapt_every == 0:
            if rp > 10.0 * rd:
                rho *= 2.0
                u *= 0.5
            elif rd > 10.0 * rp:
                rho *= 0.5
                u *= 2.0

    moment = z.copy()
    moment[0, 1:] *= s
    moment[1:, 0] *= s
    moment[1:, 1:] *= s * s
    diag_part = float(np.dot(problem.cost_diag, np.diag(moment)))
    row_part = 2.0 * float(np.dot(problem.cost_row0, moment[0, 1:]))
    objective = diag_part + row_part + problem.const_term
    return SdpSolution(moment, objective, float(rp), float(rd), it, status)


def extract_rank_one(solution, obs, tol=1e-3):
    """Read the tensor off the first row and judge tightness by eigengap."""
    if solution.status != "optimal":
        raise ValueError(f"cannot extract from a {solution.status} solution")
    m = solution.moment
    n1 = m.shape[0]
    top = scipy.linalg.eigh(
        m, check_finite=False, subset_by_index=[n1 - 2, n1 - 1], eigvals_only=True
    )
    lam2, lam1 = max(float(top[0]), 0.0), max(float(top[1]), 1e-300)
    ratio = lam2 / lam1
    corner = m[0, 0] if abs(m[0, 0]) > 1e-12 else 1.0
    x = m[0, 1:] / corner
    tensor = DenseTensor(obs.shape, x)
    if obs.mask.size:
        residual = float(np.max(np.abs(x[obs.mask.cells] - obs.values)))
    else:
        residual = 0.0
    return RankOneExtraction(tensor, ratio <= tol, float(ratio), residual)


def verify_solution(problem, solution, opts=None):
    """Independent feasibility pass: PSD and every affine constraint.

    Violations are measured in the solver's normalized units (largest observed
    magnitude scaled to one).  Returns (ok, max_violation, min_eigenvalue).
    """
    opts = opts or SolverOptions()
    m = solution.moment
    if not np.allclose(m, m.T, atol=1e-9):
        return False, np.inf, -np.inf
    s, fv_scaled, _ = _scaled_pieces(problem)
    m = m.copy()
    m[0, 1:] /= s
    m[1:, 0] /= s
    m[1:, 1:] /= s * s
    wmin = float(
        scipy.linalg.eigh(
            m, check_finite=False, subset_by_index=[0, 0], eigvals_only=True
        )[0]
    )
    vals = m[problem.fixed_i, problem.fixed_j]
    worst = float(np.max(np.abs(vals - fv_scaled) / (1.0 + np.abs(fv_scaled))))
    if problem.n_classes:
        ent = m[problem.cls_i, problem.cls_j]
        sums = np.bincount(problem.cls_id, weights=ent, minlength=problem.n_classes)
        means = sums / problem.cls_counts
        spread = np.abs(ent - means[problem.cls_id]) / (
            1.0 + np.abs(means[problem.cls_id])
        )
        worst = max(worst, float(np.max(spread)))
    ok = wmin >= -opts.eps_psd and worst <= 10.0 * opts.tol
    return ok, worst, wmin


def problem_to_dict(problem):
    """JSON-ready description: semantic fields plus explicit triplets."""
    return {
        "format": "rankone-sdp-problem-v1",
        "dims": list(problem.shape.dims),
        "kind": problem.kind,
        "mask": [list(t) for t in problem.obs.mask.entries],
        "values": [float(v) for v in problem.obs.values],
        "weights": None if problem.weights is None else [float(w) for w in problem.weights],
        "penalty": problem.penalty,
        "const_term": problem.const_term,
        "num_squares": len(problem.squares),
        "constraints": [
            {"entries": [[i, j, c] for (i, j, c) in ent], "rhs": rhs}
            for ent, rhs in problem.constraint_triplets()
        ],
        "cost_diag": [float(v) for v in problem.cost_diag],
        "cost_row0": [float(v) for v in problem.cost_row0],
    }


def problem_from_dict(data):
    if data.get("format") != "rankone-sdp-problem-v1":
        raise ValueError("not a rankone SDP problem dump")
    from .core import Mask

    shape = Shape(tuple(data["dims"]))
    mask = Mask(shape, [tuple(t) for t in data["mask"]])
    obs = ObservedTensor(mask, np.array(data["values"], dtype=np.float64))
    kind = data["kind"]
    if kind == "noisy":
        return build_sdp_noisy(obs, float(data["penalty"]))
    weights = data.get("weights")
    return build_sdp_exact(obs, None if weights is None else np.array(weights))


def solution_to_dict(solution):
    return {
        "format": "rankone-sdp-solution-v1",
        "status": solution.status,
        "objective": solution.objective,
        "primal_residual": solution.primal_residual,
        "dual_residual": solution.dual_residual,
        "iterations": solution.iterations,
        "moment": solution.moment.tolist(),
    }
