"""Compiled tree-search kernels shared by the two decoders.

Both kernels work on the upper-triangular factor R (already scaled by
sqrt(mu_c)) and the rotated observation y' = Q^T y.  The search fixes
integer coordinates from the last one upward, so depth k corresponds to
row m－k of R, and the squared residual accumulated over the fixed rows
is exactly the distance contribution of those coordinates.

Child values at a level are enumerated in ascending residual order by
zig-zagging around the unconstrained optimum (nearest integer first,
ties toward the smaller integer).
"""
import numpy as np
from numba import njit

STATUS_COMPLETED = 0
STATUS_STACK_OVERFLOW = 1
STATUS_NODE_BUDGET = 2


@njit(cache=True)
def _round_half_down(c):
    # nearest integer, ties toward the smaller one
    return np.int64(np.ceil(c - 0.5))


@njit(cache=True)
def sphere_search(rmat, yprime, max_nodes):
    """Exact closest-point search: depth-first with radius shrinking.

    Starts from an infinite radius so the first leaf (the successive
    rounding point) bounds the rest of the search.  Returns
    (z, squared distance, nodes evaluated, status).
    """
    m = rmat.shape[0]
    z = np.zeros(m, dtype=np.int64)
    zbest = np.zeros(m, dtype=np.int64)
    step = np.zeros(m, dtype=np.int64)
    pdist = np.zeros(m, dtype=np.float64)
    # targ[i, j] = y'_j minus contributions of the coordinates fixed above
    # level i, maintained for j <= i
    targ = np.zeros((m, m), dtype=np.float64)
    best = np.inf
    have_leaf = False
    nodes = 0
    status = STATUS_COMPLETED
    i = m - 1
    for j in range(m):
        targ[i, j] = yprime[j]
    c = targ[i, i] / rmat[i, i]
    z[i] = _round_half_down(c)
    step[i] = 1 if c > z[i] else -1
    while True:
        if nodes >= max_nodes:
            status = STATUS_NODE_BUDGET
            break
        nodes += 1
        r = targ[i, i] - rmat[i, i] * z[i]
        t = pdist[i] + r * r
        if t < best:
            if i == 0:
                best = t
                for j in range(m):
                    zbest[j] = z[j]
                have_leaf = True
                # the leaf's own siblings cannot beat the shrunk radius
                i += 1
                if i == m:
                    break
                z[i] += step[i]
                step[i] = -step[i] - (1 if step[i] > 0 else -1)
            else:
                pdist[i - 1] = t
                for j in range(i):
                    targ[i - 1, j] = targ[i, j] - rmat[j, i] * z[i]
                i -= 1
                c = targ[i, i] / rmat[i, i]
                z[i] = _round_half_down(c)
                step[i] = 1 if c > z[i] else -1
        else:
            if i == m - 1:
                break
            i += 1
            z[i] += step[i]
            step[i] = -step[i] - (1 if step[i] > 0 else -1)
    if not have_leaf:
        # budget spent before reaching any leaf: finish this descent greedily
        while i > 0:
            for j in range(i):
                targ[i - 1, j] = targ[i, j] - rmat[j, i] * z[i]
            i -= 1
            z[i] = _round_half_down(targ[i, i] / rmat[i, i])
        for j in range(m):
            zbest[j] = z[j]
        best = 0.0
        for row in range(m):
            acc = yprime[row]
            for col in range(row, m):
                acc -= rmat[row, col] * zbest[col]
            best += acc * acc
    return zbest, best, nodes, status


@njit(cache=True)
def _grow_i64(a):
    out = np.empty(a.shape[0] * 2, dtype=np.int64)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _grow_f64(a):
    out = np.empty(a.shape[0] * 2, dtype=np.float64)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _lex_less(a, b, nz, npar, ndep):
    # equal-depth prefixes; compare from the first fixed coordinate on
    d = ndep[a]
    za = np.empty(d, dtype=np.int64)
    zb = np.empty(d, dtype=np.int64)
    ca = a
    cb = b
    for t in range(d):
        za[t] = nz[ca]
        zb[t] = nz[cb]
        ca = npar[ca]
        cb = npar[cb]
    for t in range(d - 1, -1, -1):
        if za[t] != zb[t]:
            return za[t] < zb[t]
    return False


@njit(cache=True)
def _prio_gt(a, b, nmet, ndep, nz, npar):
    # strict total order: larger metric, then deeper, then smaller prefix
    if nmet[a] != nmet[b]:
        return nmet[a] > nmet[b]
    if ndep[a] != ndep[b]:
        return ndep[a] > ndep[b]
    return _lex_less(a, b, nz, npar, ndep)


@njit(cache=True)
def _sift_up(heap, pos, nmet, ndep, nz, npar):
    while pos > 0:
        parent = (pos - 1) >> 1
        if _prio_gt(heap[pos], heap[parent], nmet, ndep, nz, npar):
            heap[pos], heap[parent] = heap[parent], heap[pos]
            pos = parent
        else:
            break
    return pos


@njit(cache=True)
def _sift_down(heap, hsize, pos, nmet, ndep, nz, npar):
    while True:
        child = 2 * pos + 1
        if child >= hsize:
            break
        right = child + 1
        if right < hsize and _prio_gt(heap[right], heap[child], nmet, ndep, nz, npar):
            child = right
        if _prio_gt(heap[child], heap[pos], nmet, ndep, nz, npar):
            heap[pos], heap[child] = heap[child], heap[pos]
            pos = child
        else:
            break
    return pos


@njit(cache=True)
def stack_search(rmat, yprime, bias, max_stack, max_nodes):
    """Best-first search with metric bias*depth - residual.

    The stack holds the root's best child initially; each step pops the
    top entry and, unless it is a leaf, pushes its best child and its own
    next sibling.  Nodes are stored once (value + parent pointer); pops
    count as visited nodes.  Returns (z, metric, pops, status).
    """
    m = rmat.shape[0]
    cap = 256
    nz = np.empty(cap, dtype=np.int64)       # coordinate value at the node
    npar = np.empty(cap, dtype=np.int64)     # parent node id (-1 at depth 1)
    ndep = np.empty(cap, dtype=np.int64)     # depth, 1..m
    nres = np.empty(cap, dtype=np.float64)   # squared residual of the prefix
    npres = np.empty(cap, dtype=np.float64)  # parent's squared residual
    nmet = np.empty(cap, dtype=np.float64)   # bias*depth - nres
    ntarg = np.empty(cap, dtype=np.float64)  # enumeration target at the level
    nstep = np.empty(cap, dtype=np.int64)    # zig-zag offset to next sibling
    n_nodes = 0

    heap = np.empty(256, dtype=np.int64)
    hsize = 0

    zfull = np.zeros(m, dtype=np.int64)
    overflowed = False
    pops = 0

    # root's best child lives at depth 1 (bottom row of R)
    row = m - 1
    targ0 = yprime[row]
    c = targ0 / rmat[row, row]
    n0 = _round_half_down(c)
    r0 = targ0 - rmat[row, row] * n0
    nz[0] = n0
    npar[0] = -1
    ndep[0] = 1
    npres[0] = 0.0
    nres[0] = r0 * r0
    nmet[0] = bias - nres[0]
    ntarg[0] = targ0
    nstep[0] = 1 if c > n0 else -1
    n_nodes = 1
    heap[0] = 0
    hsize = 1

    while hsize > 0:
        top = heap[0]
        hsize -= 1
        heap[0] = heap[hsize]
        if hsize > 0:
            _sift_down(heap, hsize, 0, nmet, ndep, nz, npar)
        pops += 1
        d = ndep[top]
        cur = top
        while cur >= 0:
            zfull[m - ndep[cur]] = nz[cur]
            cur = npar[cur]
        if d == m:
            status = STATUS_STACK_OVERFLOW if overflowed else STATUS_COMPLETED
            return zfull, nmet[top], pops, status
        if pops >= max_nodes:
            # budget spent: complete the best path greedily, uncounted
            for row in range(m - d - 1, -1, -1):
                acc = yprime[row]
                for col in range(row + 1, m):
                    acc -= rmat[row, col] * zfull[col]
                zfull[row] = _round_half_down(acc / rmat[row, row])
            return zfull, nmet[top], pops, STATUS_NODE_BUDGET
        while n_nodes + 2 > nz.shape[0]:
            nz = _grow_i64(nz)
            npar = _grow_i64(npar)
            ndep = _grow_i64(ndep)
            nres = _grow_f64(nres)
            npres = _grow_f64(npres)
            nmet = _grow_f64(nmet)
            ntarg = _grow_f64(ntarg)
            nstep = _grow_i64(nstep)
        while hsize + 2 > heap.shape[0]:
            heap = _grow_i64(heap)

        # best child of `top` at depth d+1
        row = m - d - 1
        acc = yprime[row]
        for col in range(row + 1, m):
            acc -= rmat[row, col] * zfull[col]
        c = acc / rmat[row, row]
        n0 = _round_half_down(c)
        r = acc - rmat[row, row] * n0
        idx = n_nodes
        nz[idx] = n0
        npar[idx] = top
        ndep[idx] = d + 1
        npres[idx] = nres[top]
        nres[idx] = nres[top] + r * r
        nmet[idx] = bias * (d + 1) - nres[idx]
        ntarg[idx] = acc
        nstep[idx] = 1 if c > n0 else -1
        n_nodes += 1
        heap[hsize] = idx
        hsize += 1
        _sift_up(heap, hsize - 1, nmet, ndep, nz, npar)

        # next sibling of `top` at the same depth
        zs = nz[top] + nstep[top]
        row2 = m - d
        r2 = ntarg[top] - rmat[row2, row2] * zs
        idx = n_nodes
        nz[idx] = zs
        npar[idx] = npar[top]
        ndep[idx] = d
        npres[idx] = npres[top]
        nres[idx] = npres[top] + r2 * r2
        nmet[idx] = bias * d - nres[idx]
        ntarg[idx] = ntarg[top]
        nstep[idx] = -nstep[top] - (1 if nstep[top] > 0 else -1)
        n_nodes += 1
        heap[hsize] = idx
        hsize += 1
        _sift_up(heap, hsize - 1, nmet, ndep, nz, npar)

        while hsize > max_stack:
            worst = 0
            for t in range(1, hsize):
                if _prio_gt(heap[worst], heap[t], nmet, ndep, nz, npar):
                    worst = t
            hsize -= 1
            if worst != hsize:
                heap[worst] = heap[hsize]
                pos = _sift_down(heap, hsize, worst, nmet, ndep, nz, npar)
                _sift_up(heap, pos, nmet, ndep, nz, npar)
            overflowed = True

    # stack drained by evictions before any leaf was popped
    return zfull, -np.inf, pops, STATUS_STACK_OVERFLOW
