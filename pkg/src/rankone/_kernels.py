"""Hot combinatorial kernels: GF(2) ranks, propagation closures, axis connectivity.

Everything here is written as plain loops over primitive NumPy arrays so the
same source runs two ways: compiled with numba ``@njit`` (the default) or
interpreted as pure NumPy/Python.  Set the environment variable
``RANKONE_PURE_NUMPY=1`` before import to force the fallback path; it is also
taken automatically when numba is not importable.
"""

from __future__ import annotations

import os

import numpy as np

FORCE_FALLBACK = os.environ.get("RANKONE_PURE_NUMPY", "0").strip() not in ("", "0")

try:
    if FORCE_FALLBACK:
        raise ImportError("pure-NumPy fallback forced via RANKONE_PURE_NUMPY")
    from numba import njit as _njit

    NUMBA_ACTIVE = True
except ImportError:  # pragma: no cover - depends on environment
    NUMBA_ACTIVE = False

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@_njit(cache=True, nogil=True)
def gf2_rank_words(rows, ncols):
    """Rank over GF(2) of rows packed one uint64 word each (ncols <= 64)."""
    work = rows.copy()
    m = work.shape[0]
    rank = 0
    for col in range(ncols):
        bit = np.uint64(1) << np.uint64(col)
        pivot = -1
        for r in range(rank, m):
            if work[r] & bit:
                pivot = r
                break
        if pivot < 0:
            continue
        tmp = work[rank]
        work[rank] = work[pivot]
        work[pivot] = tmp
        prow = work[rank]
        for r in range(m):
            if r != rank and (work[r] & bit):
                work[r] ^= prow
        rank += 1
        if rank == m:
            break
    return rank


@_njit(cache=True, nogil=True)
def indicator_rank(coords, cells, offsets, ncols):
    """GF(2) rank of the indicator matrix of `cells` (valid for ncols <= 64)."""
    m = cells.shape[0]
    d = coords.shape[1]
    rows = np.zeros(m, np.uint64)
    for i in range(m):
        r = np.uint64(0)
        c = cells[i]
        for k in range(d):
            r |= np.uint64(1) << np.uint64(offsets[k] + coords[c, k] - 1)
        rows[i] = r
    return gf2_rank_words(rows, ncols)


@_njit(cache=True, nogil=True)
def closure_gs(coords, strides, member, trace):
    """Least fixpoint of the generalized-square rule, in place on `member`.

    `member` is uint8 over all cells with the seed set marked.  `trace` must
    have room for one (added, w1, w2, w3) row per cell.  Returns the final
    member count and the number of trace rows written.
    """
    N = coords.shape[0]
    d = coords.shape[1]
    mem = np.empty(N, np.int64)
    cnt = 0
    for c in range(N):
        if member[c]:
            mem[cnt] = c
            cnt += 1
    nadd = 0
    h = 0
    while h < cnt and cnt < N:
        g = mem[h]
        h += 1
        c0 = cnt
        for i in range(c0):
            a = mem[i]
            if a == g:
                continue
            for j in range(i + 1, c0):
                b = mem[j]
                if b == g:
                    continue
                lin = 0
                ok = True
                for k in range(d):
                    v1 = coords[g, k]
                    v2 = coords[a, k]
                    v3 = coords[b, k]
                    if v1 == v2:
                        vb = v3
                    elif v1 == v3:
                        vb = v2
                    elif v2 == v3:
                        vb = v1
                    else:
                        ok = False
                        break
                    lin += (vb - 1) * strides[k]
                if ok and member[lin] == 0:
                    member[lin] = 1
                    mem[cnt] = lin
                    cnt += 1
                    trace[nadd, 0] = lin
                    trace[nadd, 1] = g
                    trace[nadd, 2] = a
                    trace[nadd, 3] = b
                    nadd += 1
    return cnt, nadd


@_njit(cache=True, nogil=True)
def closure_s(coords, strides, member, trace):
    """Least fixpoint of the square rule (pair in the set plus the partner).

    Trace rows are (added, pair1, pair2, partner): {pair1,pair2; partner,added}
    is the witnessing square.
    """
    N = coords.shape[0]
    d = coords.shape[1]
    mem = np.empty(N, np.int64)
    cnt = 0
    for c in range(N):
        if member[c]:
            mem[cnt] = c
            cnt += 1
    nadd = 0
    h = 0
    while h < cnt and cnt < N:
        g = mem[h]
        h += 1
        c0 = cnt
        # g inside the opposite pair (g, a); partner c forces the candidate.
        for i in range(c0):
            a = mem[i]
            if a == g:
                continue
            for j in range(c0):
                c = mem[j]
                if c == g or c == a:
                    continue
                lin = 0
                ok = True
                for k in range(d):
                    vg = coords[g, k]
                    va = coords[a, k]
                    vc = coords[c, k]
                    if vc == vg:
                        vb = va
                    elif vc == va:
                        vb = vg
                    else:
                        ok = False
                        break
                    lin += (vb - 1) * strides[k]
                if ok and member[lin] == 0:
                    member[lin] = 1
                    mem[cnt] = lin
                    cnt += 1
                    trace[nadd, 0] = lin
                    trace[nadd, 1] = g
                    trace[nadd, 2] = a
                    trace[nadd, 3] = c
                    nadd += 1
        # g as the partner of the candidate; the pair (a, b) lies in the set.
        for i in range(c0):
            a = mem[i]
            if a == g:
                continue
            for j in range(i + 1, c0):
                b = mem[j]
                if b == g:
                    continue
                lin = 0
                ok = True
                for k in range(d):
                    va = coords[a, k]
                    vb = coords[b, k]
                    vg = coords[g, k]
                    if vg == va:
                        vx = vb
                    elif vg == vb:
                        vx = va
                    else:
                        ok = False
                        break
                    lin += (vx - 1) * strides[k]
                if ok and member[lin] == 0:
                    member[lin] = 1
                    mem[cnt] = lin
                    cnt += 1
                    trace[nadd, 0] = lin
                    trace[nadd, 1] = a
                    trace[nadd, 2] = b
                    trace[nadd, 3] = g
                    nadd += 1
    return cnt, nadd


@_njit(cache=True, nogil=True)
def closure_sr(coords, strides, omega, member, trace):
    """Least fixpoint of the restricted square rule (both pair anchors in omega).

    Trace rows are (added, a1, b, a2): {a1,b; a2,added} is the witnessing
    square with a1, a2 drawn from omega and b from the propagated set.
    """
    N = coords.shape[0]
    d = coords.shape[1]
    nom = omega.shape[0]
    mem = np.empty(N, np.int64)
    cnt = 0
    for c in range(N):
        if member[c]:
            mem[cnt] = c
            cnt += 1
    nadd = 0
    h = 0
    while h < cnt and cnt < N:
        b = mem[h]
        h += 1
        for i in range(nom):
            a1 = omega[i]
            if a1 == b:
                continue
            for j in range(nom):
                a2 = omega[j]
                if a2 == a1 or a2 == b:
                    continue
                lin = 0
                ok = True
                for k in range(d):
                    v1 = coords[a1, k]
                    vb = coords[b, k]
                    v2 = coords[a2, k]
                    if v2 == v1:
                        vg = vb
                    elif v2 == vb:
                        vg = v1
                    else:
                        ok = False
                        break
                    lin += (vg - 1) * strides[k]
                if ok and member[lin] == 0:
                    member[lin] = 1
                    mem[cnt] = lin
                    cnt += 1
                    trace[nadd, 0] = lin
                    trace[nadd, 1] = a1
                    trace[nadd, 2] = b
                    trace[nadd, 3] = a2
                    nadd += 1
    return cnt, nadd


@_njit(cache=True, nogil=True)
def square_step(coords, strides, member, frontier):
    """One synchronous square-rule pass; marks new cells in `frontier`.

    Returns the number of cells marked.  `member` is not modified.
    """
    N = coords.shape[0]
    d = coords.shape[1]
    mem = np.empty(N, np.int64)
    cnt = 0
    for c in range(N):
        if member[c]:
            mem[cnt] = c
            cnt += 1
    nf = 0
    for i in range(cnt):
        a = mem[i]
        for j in range(i + 1, cnt):
            b = mem[j]
            for l in range(cnt):
                c = mem[l]
                if c == a or c == b:
                    continue
                lin = 0
                ok = True
                for k in range(d):
                    va = coords[a, k]
                    vb = coords[b, k]
                    vc = coords[c, k]
                    if vc == va:
                        vx = vb
                    elif vc == vb:
                        vx = va
                    else:
                        ok = False
                        break
                    lin += (vx - 1) * strides[k]
                if ok and member[lin] == 0 and frontier[lin] == 0:
                    frontier[lin] = 1
                    nf += 1
    return nf


@_njit(cache=True, nogil=True)
def axis_component_root(coords, omega, dims, anchored):
    """Representative index (into omega) of a coordinate-covering component.

    Cells are adjacent when they differ in exactly one axis.  Returns -1 when
    no connected component covers every value of every axis.  With `anchored`
    nonzero only the component of omega[0] is examined (the convention behind
    the published mask tables; identical at minimal cardinality).
    """
    m = omega.shape[0]
    d = coords.shape[1]
    if m == 0:
        return -1
    parent = np.arange(m)
    for i in range(m):
        for j in range(i + 1, m):
            diff = 0
            for k in range(d):
                if coords[omega[i], k] != coords[omega[j], k]:
                    diff += 1
                    if diff > 1:
                        break
            if diff == 1:
                ri = i
                while parent[ri] != ri:
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    rj = parent[rj]
                if ri != rj:
                    parent[rj] = ri
    root = np.empty(m, np.int64)
    for i in range(m):
        r = i
        while parent[r] != r:
            r = parent[r]
        root[i] = r
    nmax = 0
    for k in range(d):
        if dims[k] > nmax:
            nmax = dims[k]
    seen = np.zeros(nmax + 1, np.uint8)
    for rv in range(m):
        if root[rv] != rv:
            continue
        if anchored and rv != root[0]:
            continue
        good = True
        for k in range(d):
            for t in range(1, dims[k] + 1):
                seen[t] = 0
            for i in range(m):
                if root[i] == rv:
                    seen[coords[omega[i], k]] = 1
            for t in range(1, dims[k] + 1):
                if seen[t] == 0:
                    good = False
                    break
            if not good:
                break
        if good:
            return rv
    return -1
