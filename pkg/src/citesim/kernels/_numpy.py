"""Pure-numpy kernels (fallback path and reference for the numba path)."""

import numpy as np
import scipy.sparse as sp


def topk_keys(keys, ids, k):
    """Return the ids of the ``k`` largest keys, sorted ascending.

    Ties on the key go to the smaller id.
    """
    n = keys.size
    if k <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if k >= n:
        return np.sort(ids.astype(np.int64))
    part = np.argpartition(-keys, k - 1)
    thr = keys[part[k - 1]]
    above = ids[keys > thr]
    tied = np.sort(ids[keys == thr])
    out = np.concatenate([above, tied[: k - above.size]])
    return np.sort(out.astype(np.int64))


def composite_topk(p_raw, r_raw, f_raw, excluded, pw, rw, fw, u, k):
    """Weighted sampling without replacement over all non-excluded rows.

    Each family is normalised over the pool, combined with the phenotype
    weights and turned into A-res keys ``log(u) / w``. Rows with zero weight
    never enter the reservoir. If every weight in the pool is zero the pool
    is sampled uniformly.

    Returns ``(selected, n_positive, degenerate)``.
    """
    pool = np.flatnonzero(~excluded)
    if pool.size == 0 or k <= 0:
        return np.empty(0, dtype=np.int64), 0, False
    p = p_raw[pool]
    r = r_raw[pool]
    f = f_raw[pool]
    ps, rs, fs = p.sum(), r.sum(), f.sum()
    cp = pw / ps if ps > 0 else 0.0
    cr = rw / rs if rs > 0 else 0.0
    cf = fw / fs if fs > 0 else 0.0
    w = cp * p + cr * r + cf * f
    pos = w > 0
    n_pos = int(pos.sum())
    with np.errstate(divide="ignore"):
        if n_pos == 0:
            keys = np.log(u[pool])
            return topk_keys(keys, pool, k), 0, True
        keys = np.log(u[pool[pos]]) / w[pos]
    return topk_keys(keys, pool[pos], k), n_pos, False


def _adjacency(indptr, indices):
    n = indptr.size - 1
    data = np.ones(indices.size, dtype=np.int64)
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def triangle_counts(indptr, indices):
    """Triangles through each node of a simple undirected CSR graph."""
    a = _adjacency(indptr, indices)
    t = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel()
    return (t // 2).astype(np.int64)


def core_numbers(indptr, indices):
    """Core number of every node by level-wise peeling."""
    n = indptr.size - 1
    deg = np.diff(indptr).astype(np.int64)
    core = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    row_len = np.diff(indptr)
    k = 0
    while alive.any():
        k = max(k, int(deg[alive].min()))
        while True:
            peel = alive & (deg <= k)
            if not peel.any():
                break
            core[peel] = k
            alive[peel] = False
            nbrs = indices[np.repeat(peel, row_len)]
            deg -= np.bincount(nbrs, minlength=n)
    return core
