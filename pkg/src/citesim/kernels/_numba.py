"""numba kernels. Semantics match ``_numpy`` exactly."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _below(ka, ia, kb, ib):
    # (ka, ia) ranks below (kb, ib): smaller key, or equal key and larger id
    return ka < kb or (ka == kb and ia > ib)


@njit(cache=True, nogil=True)
def _sift_down(hk, hi, size, pos):
    while True:
        left = 2 * pos + 1
        if left >= size:
            return
        child = left
        right = left + 1
        if right < size and _below(hk[right], hi[right], hk[left], hi[left]):
            child = right
        if _below(hk[child], hi[child], hk[pos], hi[pos]):
            hk[pos], hk[child] = hk[child], hk[pos]
            hi[pos], hi[child] = hi[child], hi[pos]
            pos = child
        else:
            return


@njit(cache=True, nogil=True)
def _sift_up(hk, hi, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if _below(hk[pos], hi[pos], hk[parent], hi[parent]):
            hk[pos], hk[parent] = hk[parent], hk[pos]
            hi[pos], hi[parent] = hi[parent], hi[pos]
            pos = parent
        else:
            return


@njit(cache=True, nogil=True)
def _offer(hk, hi, size, k, key, idx):
    """Push into a size-k min-heap reservoir; returns the new size."""
    if size < k:
        hk[size] = key
        hi[size] = idx
        _sift_up(hk, hi, size)
        return size + 1
    if _below(hk[0], hi[0], key, idx):
        hk[0] = key
        hi[0] = idx
        _sift_down(hk, hi, size, 0)
    return size


@njit(cache=True, nogil=True)
def topk_keys(keys, ids, k):
    n = keys.size
    if k <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    cap = min(k, n)
    hk = np.empty(cap, dtype=np.float64)
    hi = np.empty(cap, dtype=np.int64)
    size = 0
    for j in range(n):
        size = _offer(hk, hi, size, cap, keys[j], np.int64(ids[j]))
    return np.sort(hi[:size])


@njit(cache=True, nogil=True)
def composite_topk(p_raw, r_raw, f_raw, excluded, pw, rw, fw, u, k):
    n = p_raw.size
    ps = 0.0
    rs = 0.0
    fs = 0.0
    n_pool = 0
    for i in range(n):
        if not excluded[i]:
            ps += p_raw[i]
            rs += r_raw[i]
            fs += f_raw[i]
            n_pool += 1
    if n_pool == 0 or k <= 0:
        return np.empty(0, dtype=np.int64), 0, False
    cp = pw / ps if ps > 0 else 0.0
    cr = rw / rs if rs > 0 else 0.0
    cf = fw / fs if fs > 0 else 0.0
    cap = min(k, n_pool)
    hk = np.empty(cap, dtype=np.float64)
    hi = np.empty(cap, dtype=np.int64)
    size = 0
    n_pos = 0
    for i in range(n):
        if excluded[i]:
            continue
        w = cp * p_raw[i] + cr * r_raw[i] + cf * f_raw[i]
        if w > 0:
            n_pos += 1
            # log(u) <= u - 1, so a key whose bound sits clearly below the
            # reservoir floor cannot get in; skip the log for it
            if size == cap and (u[i] - 1.0) / w < hk[0] * (1.0 + 1e-9):
                continue
            size = _offer(hk, hi, size, cap, np.log(u[i]) / w, np.int64(i))
    if n_pos == 0:
        size = 0
        for i in range(n):
            if not excluded[i]:
                size = _offer(hk, hi, size, cap, np.log(u[i]), np.int64(i))
        return np.sort(hi[:size]), 0, True
    return np.sort(hi[:size]), n_pos, False


@njit(cache=True, nogil=True)
def triangle_counts(indptr, indices):
    n = indptr.size - 1
    t = np.zeros(n, dtype=np.int64)
    for a in range(n):
        for p in range(indptr[a], indptr[a + 1]):
            b = indices[p]
            if b <= a:
                continue
            # merge the neighbours of a and b that are greater than b
            i = p + 1
            j = indptr[b]
            iend = indptr[a + 1]
            jend = indptr[b + 1]
            while j < jend and indices[j] <= b:
                j += 1
            while i < iend and j < jend:
                x = indices[i]
                y = indices[j]
                if x == y:
                    t[a] += 1
                    t[b] += 1
                    t[x] += 1
                    i += 1
                    j += 1
                elif x < y:
                    i += 1
                else:
                    j += 1
    return t


@njit(cache=True, nogil=True)
def core_numbers(indptr, indices):
    # Batagelj-Zaversnik bucket algorithm
    n = indptr.size - 1
    deg = np.empty(n, dtype=np.int64)
    md = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] > md:
            md = deg[v]
    bins = np.zeros(md + 1, dtype=np.int64)
    for v in range(n):
        bins[deg[v]] += 1
    start = 0
    for d in range(md + 1):
        num = bins[d]
        bins[d] = start
        start += num
    pos = np.empty(n, dtype=np.int64)
    vert = np.empty(n, dtype=np.int64)
    for v in range(n):
        pos[v] = bins[deg[v]]
        vert[pos[v]] = v
        bins[deg[v]] += 1
    for d in range(md, 0, -1):
        bins[d] = bins[d - 1]
    if md >= 0 and n > 0:
        bins[0] = 0
    for i in range(n):
        v = vert[i]
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    pos[u] = pw
                    vert[pu] = w
                    pos[w] = pu
                    vert[pw] = u
                bins[du] += 1
                deg[u] -= 1
    return deg
