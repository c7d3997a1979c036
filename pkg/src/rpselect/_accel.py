"""Shortest-delay kernels with a numba path and a pure-numpy fallback.

Set ``RPSELECT_NO_NUMBA=1`` to force the numpy implementation. Both paths
produce bitwise-identical results: every accumulated total is the left fold
``dist[pred] + w`` along the chosen path, and both use the same label order
(delay, then cost, then node sequence) with the same relative tolerance.
"""

import math
import os

import numpy as np

REL_TOL = 1e-9

_DISABLED = os.environ.get("RPSELECT_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by RPSELECT_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if HAS_NUMBA else "numpy"


@njit(cache=True)
def _cmp_scalar(a, b, rtol):
    if a == b:
        return 0
    if math.isinf(a) or math.isinf(b):
        return -1 if a < b else 1
    if abs(a - b) <= rtol * max(abs(a), abs(b)):
        return 0
    return -1 if a < b else 1


@njit(cache=True)
def _cmp_paths(pred, a, b, tail, n):
    """Compare path(a)+[tail] with path(b)+[tail]; ``tail < 0`` appends nothing."""
    sa = np.empty(n, np.int64)
    sb = np.empty(n, np.int64)
    la = 0
    x = a
    while x != -1 and la < n:
        sa[la] = x
        la += 1
        x = pred[x]
    lb = 0
    x = b
    while x != -1 and lb < n:
        sb[lb] = x
        lb += 1
        x = pred[x]
    # sequences are stored reversed; index i walks them from the source
    ta = la + 1 if tail >= 0 else la
    tb = lb + 1 if tail >= 0 else lb
    i = 0
    while True:
        if i >= ta and i >= tb:
            return 0
        if i >= ta:
            return -1
        if i >= tb:
            return 1
        ea = sa[la - 1 - i] if i < la else tail
        eb = sb[lb - 1 - i] if i < lb else tail
        if ea != eb:
            return -1 if ea < eb else 1
        i += 1


@njit(cache=True)
def _sssp_numba(indptr, indices, delay, cost, src, rtol):
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    csum = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, np.bool_)
    dist[src] = 0.0
    csum[src] = 0.0
    for _ in range(n):
        # exact (delay, cost, path) minimum: a total order, so scan order is irrelevant
        u = -1
        for v in range(n):
            if done[v] or dist[v] == np.inf:
                continue
            if u == -1:
                u = v
            elif dist[v] < dist[u]:
                u = v
            elif dist[v] == dist[u]:
                if csum[v] < csum[u]:
                    u = v
                elif csum[v] == csum[u] and _cmp_paths(pred, v, u, -1, n) < 0:
                    u = v
        if u == -1:
            break
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if done[v]:
                continue
            nd = dist[u] + delay[e]
            nc = csum[u] + cost[e]
            c = _cmp_scalar(nd, dist[v], rtol)
            if c == 0:
                c = _cmp_scalar(nc, csum[v], rtol)
            if c == 0 and pred[v] != -1:
                c = _cmp_paths(pred, u, pred[v], v, n)
            if c < 0:
                dist[v] = nd
                csum[v] = nc
                pred[v] = u
    return dist, csum, pred


def _py_extended_path(pred, a, v):
    seq = [] if v is None else [v]
    while a != -1:
        seq.append(int(a))
        a = pred[a]
    seq.reverse()
    return seq


def _cmp_vec(a, b, rtol):
    out = np.where(a < b, -1, 1)
    with np.errstate(invalid="ignore"):
        close = np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b))
    finite = np.isfinite(a) & np.isfinite(b)
    out[(close & finite) | (a == b)] = 0
    return out


def _sssp_numpy(indptr, indices, delay, cost, src, rtol):
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    csum = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, bool)
    ids = np.arange(n)
    dist[src] = 0.0
    csum[src] = 0.0
    for _ in range(n):
        open_ = ids[~done & np.isfinite(dist)]
        if open_.size == 0:
            break
        ties = open_[dist[open_] == dist[open_].min()]
        ties = ties[csum[ties] == csum[ties].min()]
        if ties.size == 1:
            u = int(ties[0])
        else:
            u = min((int(t) for t in ties), key=lambda t: _py_extended_path(pred, t, None))
        done[u] = True
        lo, hi = indptr[u], indptr[u + 1]
        vs = indices[lo:hi]
        keep = ~done[vs]
        if not keep.any():
            continue
        vs = vs[keep]
        nd = dist[u] + delay[lo:hi][keep]
        nc = csum[u] + cost[lo:hi][keep]
        c = _cmp_vec(nd, dist[vs], rtol)
        tie = c == 0
        if tie.any():
            c[tie] = _cmp_vec(nc[tie], csum[vs][tie], rtol)
        for i in np.flatnonzero(c == 0):
            v = int(vs[i])
            if pred[v] != -1:
                pa = _py_extended_path(pred, u, v)
                pb = _py_extended_path(pred, int(pred[v]), v)
                c[i] = -1 if pa < pb else (1 if pb < pa else 0)
        better = c < 0
        upd = vs[better]
        dist[upd] = nd[better]
        csum[upd] = nc[better]
        pred[upd] = u
    return dist, csum, pred


def sssp(indptr, indices, delay, cost, src, rtol=REL_TOL):
    """Single-source shortest-delay sweep.

    Returns ``(delay, cost, pred)`` arrays; unreachable entries have infinite
    delay/cost and ``pred == -1``.
    """
    if HAS_NUMBA:
        return _sssp_numba(indptr, indices, delay, cost, np.int64(src), rtol)
    return _sssp_numpy(indptr, indices, delay, cost, int(src), rtol)


def sssp_numpy(indptr, indices, delay, cost, src, rtol=REL_TOL):
    return _sssp_numpy(indptr, indices, delay, cost, int(src), rtol)


def sssp_numba(indptr, indices, delay, cost, src, rtol=REL_TOL):
    if not HAS_NUMBA:
        raise RuntimeError("numba backend unavailable")
    return _sssp_numba(indptr, indices, delay, cost, np.int64(src), rtol)


def all_pairs(indptr, indices, delay, cost, rtol=REL_TOL):
    """Stack ``sssp`` from every node into (n, n) delay/cost/pred matrices."""
    n = indptr.shape[0] - 1
    D = np.empty((n, n))
    C = np.empty((n, n))
    P = np.empty((n, n), np.int64)
    for s in range(n):
        D[s], C[s], P[s] = sssp(indptr, indices, delay, cost, s, rtol)
    return D, C, P
