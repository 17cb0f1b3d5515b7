"""Pure-Python link-feature kernel (fallback for the compiled ``_kernels``)."""
import math

import numpy as np

N_KINDS = 10
N_FEATURES = 26
PATH_CAP = 6


def link_features(out_ptr, out_idx, in_ptr, in_idx, und_ptr, und_idx, kinds, us, vs, pins, remove):
    """Feature rows for the links ``us[t] -> vs[t]`` (see ``attack.FEATURE_NAMES``).

    Adjacency is CSR with one entry per edge instance.  When ``remove[t]`` is
    set the link is an existing edge and one instance of it is ignored.
    """
    out_ptr = out_ptr.tolist(); out_idx = out_idx.tolist()
    in_ptr = in_ptr.tolist()
    und_ptr = und_ptr.tolist(); und_idx = und_idx.tolist()
    kinds = kinds.tolist()
    m = len(us)
    feats = np.zeros((m, N_FEATURES))
    log1p = math.log1p
    for t, (u, v, pin, rm) in enumerate(zip(us.tolist(), vs.tolist(), pins.tolist(), remove.tolist())):
        row = feats[t]
        row[0] = log1p(out_ptr[u + 1] - out_ptr[u] - rm)
        row[1] = log1p(in_ptr[v + 1] - in_ptr[v] - rm)

        nbr_u = set(und_idx[und_ptr[u]:und_ptr[u + 1]])
        nbr_v = set(und_idx[und_ptr[v]:und_ptr[v + 1]])
        nbr_u.discard(u); nbr_u.discard(v)
        nbr_v.discard(u); nbr_v.discard(v)
        row[2] = log1p(len(nbr_u & nbr_v))

        row[3] = _distance(u, v, rm, und_ptr, und_idx)
        row[4] = pin
        row[5 + kinds[u]] = 1.0
        row[5 + N_KINDS + kinds[v]] = 1.0

        succ_u = set(out_idx[out_ptr[u]:out_ptr[u + 1]])
        succ_v = set(out_idx[out_ptr[v]:out_ptr[v + 1]])
        row[25] = log1p(len(succ_u & succ_v))
    return feats


def _distance(u, v, rm, und_ptr, und_idx):
    if u == v:
        return 0.0
    direct = und_idx[und_ptr[u]:und_ptr[u + 1]].count(v) - rm
    if direct > 0:
        return 1.0
    seen = {u}
    frontier = [u]
    for depth in range(1, PATH_CAP):
        nxt = []
        for x in frontier:
            for y in und_idx[und_ptr[x]:und_ptr[x + 1]]:
                if y in seen:
                    continue
                if y == v:
                    if x == u:
                        continue  # the removed u-v instance
                    return float(depth)
                seen.add(y)
                nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    return float(PATH_CAP)
