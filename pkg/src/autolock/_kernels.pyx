# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled link-feature kernel; mirrors ``_kernels_py.link_features``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log1p

cnp.import_array()

cdef enum:
    N_KINDS = 10
    N_FEATURES = 26
    PATH_CAP = 6


cdef double _distance(int u, int v, int rm, const int[:] und_ptr, const int[:] und_idx,
                      int[:] seen, int stamp, int[:] frontier, int[:] nxt) noexcept nogil:
    cdef int direct = 0, p, x, y, depth, nf, nn, i
    if u == v:
        return 0.0
    for p in range(und_ptr[u], und_ptr[u + 1]):
        if und_idx[p] == v:
            direct += 1
    if direct - rm > 0:
        return 1.0
    seen[u] = stamp
    frontier[0] = u
    nf = 1
    for depth in range(1, PATH_CAP):
        nn = 0
        for i in range(nf):
            x = frontier[i]
            for p in range(und_ptr[x], und_ptr[x + 1]):
                y = und_idx[p]
                if seen[y] == stamp:
                    continue
                if y == v:
                    if x == u:
                        continue
                    return <double>depth
                seen[y] = stamp
                nxt[nn] = y
                nn += 1
        if nn == 0:
            break
        for i in range(nn):
            frontier[i] = nxt[i]
        nf = nn
    return <double>PATH_CAP


def link_features(out_ptr, out_idx, in_ptr, in_idx, und_ptr, und_idx, kinds, us, vs, pins, remove):
    cdef const int[:] o_ptr = np.ascontiguousarray(out_ptr, dtype=np.intc)
    cdef const int[:] o_idx = np.ascontiguousarray(out_idx, dtype=np.intc)
    cdef const int[:] i_ptr = np.ascontiguousarray(in_ptr, dtype=np.intc)
    cdef const int[:] u_ptr = np.ascontiguousarray(und_ptr, dtype=np.intc)
    cdef const int[:] u_idx = np.ascontiguousarray(und_idx, dtype=np.intc)
    cdef const int[:] knd = np.ascontiguousarray(kinds, dtype=np.intc)
    cdef const int[:] lu = np.ascontiguousarray(us, dtype=np.intc)
    cdef const int[:] lv = np.ascontiguousarray(vs, dtype=np.intc)
    cdef const int[:] lp = np.ascontiguousarray(pins, dtype=np.intc)
    cdef const int[:] lr = np.ascontiguousarray(remove, dtype=np.intc)
    cdef int n = o_ptr.shape[0] - 1
    cdef int m = lu.shape[0]
    out = np.zeros((m, N_FEATURES), dtype=np.float64)
    cdef double[:, :] f = out
    cdef int[:] mark_u = np.zeros(max(n, 1), dtype=np.intc)
    cdef int[:] mark_v = np.zeros(max(n, 1), dtype=np.intc)
    cdef int[:] seen = np.zeros(max(n, 1), dtype=np.intc)
    cdef int[:] frontier = np.zeros(max(n, 1), dtype=np.intc)
    cdef int[:] nxt = np.zeros(max(n, 1), dtype=np.intc)
    cdef int t, u, v, rm, p, y, cn, ov, stamp
    with nogil:
        for t in range(m):
            u = lu[t]
            v = lv[t]
            rm = lr[t]
            stamp = t + 1
            f[t, 0] = log1p(o_ptr[u + 1] - o_ptr[u] - rm)
            f[t, 1] = log1p(i_ptr[v + 1] - i_ptr[v] - rm)

            for p in range(u_ptr[u], u_ptr[u + 1]):
                mark_u[u_idx[p]] = stamp
            cn = 0
            for p in range(u_ptr[v], u_ptr[v + 1]):
                y = u_idx[p]
                if y != u and y != v and mark_u[y] == stamp and mark_v[y] != stamp:
                    cn += 1
                mark_v[y] = stamp
            f[t, 2] = log1p(cn)

            f[t, 3] = _distance(u, v, rm, u_ptr, u_idx, seen, stamp, frontier, nxt)
            f[t, 4] = lp[t]
            f[t, 5 + knd[u]] = 1.0
            f[t, 5 + N_KINDS + knd[v]] = 1.0

            # mark_u/mark_v reused with a second stamp for successor sets
            for p in range(o_ptr[u], o_ptr[u + 1]):
                mark_u[o_idx[p]] = -stamp
            ov = 0
            for p in range(o_ptr[v], o_ptr[v + 1]):
                y = o_idx[p]
                if mark_u[y] == -stamp and mark_v[y] != -stamp:
                    ov += 1
                mark_v[y] = -stamp
            f[t, 25] = log1p(ov)
    return out
