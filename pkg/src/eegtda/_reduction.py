"""Z/2 column reduction of the triangle/edge boundary matrix.

The numba kernel keeps the working column as a dense bitset over edge
indices. Most pivot columns are raw three-edge triangle boundaries, so an
elimination step is two bit flips plus a downward scan for the new lowest
set bit, which is amortized linear per column. A pure Python big-integer
fallback (used when numba is unavailable or EEGTDA_PURE_PYTHON=1 is set)
implements the same reduction and is exercised by the test suite.

Both paths process triangles in filtration order and return every claimed
(edge, triangle) pivot pair; callers filter zero-persistence pairs.
"""
from __future__ import annotations

import os

import numpy as np

_USE_NUMBA = os.environ.get("EEGTDA_PURE_PYTHON", "") != "1"
if _USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        _USE_NUMBA = False

if _USE_NUMBA:

    @njit(cache=True)
    def _hb64(x):
        """Index of the highest set bit of a nonzero uint64."""
        h = 0
        if x >> np.uint64(32):
            x >>= np.uint64(32)
            h += 32
        if x >> np.uint64(16):
            x >>= np.uint64(16)
            h += 16
        if x >> np.uint64(8):
            x >>= np.uint64(8)
            h += 8
        if x >> np.uint64(4):
            x >>= np.uint64(4)
            h += 4
        if x >> np.uint64(2):
            x >>= np.uint64(2)
            h += 2
        if x >> np.uint64(1):
            h += 1
        return h

    @njit(cache=True)
    def _count_triangles(dm, t_cut):
        w = dm.shape[0]
        cnt = 0
        for i in range(w):
            for j in range(i + 1, w):
                dij = dm[i, j]
                if dij > t_cut:
                    continue
                for k in range(j + 1, w):
                    v = dij
                    if dm[i, k] > v:
                        v = dm[i, k]
                    if dm[j, k] > v:
                        v = dm[j, k]
                    if v <= t_cut:
                        cnt += 1
        return cnt

    @njit(cache=True)
    def _fill_triangles(dm, t_cut, tri_i, tri_j, tri_k, tri_val):
        w = dm.shape[0]
        pos = 0
        for i in range(w):
            for j in range(i + 1, w):
                dij = dm[i, j]
                if dij > t_cut:
                    continue
                for k in range(j + 1, w):
                    v = dij
                    if dm[i, k] > v:
                        v = dm[i, k]
                    if dm[j, k] > v:
                        v = dm[j, k]
                    if v <= t_cut:
                        tri_i[pos] = i
                        tri_j[pos] = j
                        tri_k[pos] = k
                        tri_val[pos] = v
                        pos += 1

    @njit(cache=True)
    def _reduce_kernel(tri_e, n_edges):
        """Reduce triangle columns in order; return claimed (edge, triangle) pairs.

        tri_e holds each triangle's three edge indices, ascending, rows in
        filtration order.
        """
        n_t = tri_e.shape[0]
        nwords = (n_edges + 63) >> 6
        work = np.zeros(nwords, np.uint64)

        pivot_kind = np.zeros(n_edges, np.uint8)  # 0 free, 1 two-entry, 2 general
        piv2 = np.full((n_edges, 2), -1, np.int32)
        gstart = np.zeros(n_edges, np.int64)
        glen = np.zeros(n_edges, np.int64)
        gbuf = np.empty(1 << 12, np.int32)
        gpos = 0

        out_edge = np.empty(n_edges, np.int32)
        out_tri = np.empty(n_edges, np.int64)
        n_out = 0

        one = np.uint64(1)
        for t in range(n_t):
            e0 = tri_e[t, 0]
            e1 = tri_e[t, 1]
            e2 = tri_e[t, 2]
            work[e0 >> 6] ^= one << np.uint64(e0 & 63)
            work[e1 >> 6] ^= one << np.uint64(e1 & 63)
            work[e2 >> 6] ^= one << np.uint64(e2 & 63)
            wmin = e0 >> 6
            wmax = e2 >> 6
            low = np.int64(e2)

            while low >= 0:
                kind = pivot_kind[low]
                if kind == 0:
                    # free row: claim the pivot, store the working column
                    cnt = 0
                    for wd in range(wmin, (low >> 6) + 1):
                        x = work[wd]
                        while x:
                            x &= x - one
                            cnt += 1
                    if cnt == 3:
                        pivot_kind[low] = 1
                        m = 0
                        for wd in range(wmin, (low >> 6) + 1):
                            x = work[wd]
                            while x:
                                b = _hb64(x)
                                x ^= one << np.uint64(b)
                                e = (wd << 6) + b
                                if e != low:
                                    piv2[low, m] = e
                                    m += 1
                    else:
                        pivot_kind[low] = 2
                        if gpos + cnt > gbuf.shape[0]:
                            grown = np.empty(
                                max(gbuf.shape[0] * 2, gpos + cnt), np.int32
                            )
                            grown[:gpos] = gbuf[:gpos]
                            gbuf = grown
                        gstart[low] = gpos
                        glen[low] = cnt
                        for wd in range(wmin, (low >> 6) + 1):
                            x = work[wd]
                            while x:
                                b = _hb64(x)
                                x ^= one << np.uint64(b)
                                gbuf[gpos] = (wd << 6) + b
                                gpos += 1
                    out_edge[n_out] = np.int32(low)
                    out_tri[n_out] = t
                    n_out += 1
                    break
                if kind == 1:
                    a = piv2[low, 0]
                    b = piv2[low, 1]
                    work[a >> 6] ^= one << np.uint64(a & 63)
                    work[b >> 6] ^= one << np.uint64(b & 63)
                    if (a >> 6) < wmin:
                        wmin = a >> 6
                    if (b >> 6) < wmin:
                        wmin = b >> 6
                    work[low >> 6] ^= one << np.uint64(low & 63)
                else:
                    s = gstart[low]
                    for q in range(glen[low]):
                        e = gbuf[s + q]
                        work[e >> 6] ^= one << np.uint64(e & 63)
                        if (e >> 6) < wmin:
                            wmin = e >> 6
                # find the new lowest set bit, scanning downward from low
                nw = low >> 6
                x = work[nw] & ((one << np.uint64(low & 63)) - one)
                low = np.int64(-1)
                if x:
                    low = np.int64((nw << 6) + _hb64(x))
                else:
                    for wd in range(nw - 1, wmin - 1, -1):
                        if work[wd]:
                            low = np.int64((wd << 6) + _hb64(work[wd]))
                            break
            for wd in range(wmin, wmax + 1):
                work[wd] = np.uint64(0)

        return out_edge[:n_out], out_tri[:n_out]


def _reduce_python(tri_e, n_edges):
    """Big-integer reference reduction; same contract as the numba kernel."""
    pivot: dict[int, int] = {}
    out_edge, out_tri = [], []
    for t in range(tri_e.shape[0]):
        e0, e1, e2 = (int(v) for v in tri_e[t])
        col = (1 << e0) | (1 << e1) | (1 << e2)
        while col:
            low = col.bit_length() - 1
            other = pivot.get(low)
            if other is None:
                pivot[low] = col
                out_edge.append(low)
                out_tri.append(t)
                break
            col ^= other
    return (
        np.array(out_edge, dtype=np.int32),
        np.array(out_tri, dtype=np.int64),
    )


def enumerate_triangles(dm: np.ndarray, t_cut: float):
    """All vertex triples with filtration value <= t_cut, in filtration order
    (value, then lexicographic). Returns (tri_ijk int32 array, values)."""
    w = dm.shape[0]
    if _USE_NUMBA:
        cnt = _count_triangles(dm, t_cut)
        tri_i = np.empty(cnt, np.int32)
        tri_j = np.empty(cnt, np.int32)
        tri_k = np.empty(cnt, np.int32)
        tri_val = np.empty(cnt, np.float64)
        _fill_triangles(dm, t_cut, tri_i, tri_j, tri_k, tri_val)
    else:
        tri_i_l, tri_j_l, tri_k_l, tri_v_l = [], [], [], []
        for i in range(w):
            row = dm[i]
            for j in range(i + 1, w):
                dij = row[j]
                if dij > t_cut:
                    continue
                ks = np.arange(j + 1, w)
                if not len(ks):
                    continue
                v = np.maximum(np.maximum(row[j + 1 :], dm[j, j + 1 :]), dij)
                sel = v <= t_cut
                tri_i_l.append(np.full(int(sel.sum()), i, np.int32))
                tri_j_l.append(np.full(int(sel.sum()), j, np.int32))
                tri_k_l.append(ks[sel].astype(np.int32))
                tri_v_l.append(v[sel])
        if tri_i_l:
            tri_i = np.concatenate(tri_i_l)
            tri_j = np.concatenate(tri_j_l)
            tri_k = np.concatenate(tri_k_l)
            tri_val = np.concatenate(tri_v_l)
        else:
            tri_i = tri_j = tri_k = np.empty(0, np.int32)
            tri_val = np.empty(0, np.float64)

    order = np.lexsort((tri_k, tri_j, tri_i, tri_val))
    tri_ijk = np.stack([tri_i[order], tri_j[order], tri_k[order]], axis=1)
    return tri_ijk, tri_val[order]


def reduce_triangles(tri_e: np.ndarray, n_edges: int):
    """Run the boundary-matrix reduction; returns (claimed edges, triangle idx)."""
    tri_e = np.ascontiguousarray(tri_e, dtype=np.int32)
    if _USE_NUMBA and n_edges > 0 and tri_e.shape[0] > 0:
        return _reduce_kernel(tri_e, n_edges)
    return _reduce_python(tri_e, n_edges)
