"""Pure-Python versions of the hot kernels.

Used when the compiled extension is unavailable or ``KGSHIELD_PURE_PYTHON=1``.
Every function here returns exactly what its compiled twin returns.
"""

from __future__ import annotations

import numpy as np

CONTROL_THRESHOLD = 0.5


def connected_subsets(indptr: np.ndarray, indices: np.ndarray, x: int) -> np.ndarray:
    """Vertex sets of size ``x`` inducing a connected subgraph (ESU enumeration).

    ``indptr``/``indices`` describe a simple undirected adjacency without
    self-loops.  Rows come back unsorted; the caller canonicalises them.
    """
    n = len(indptr) - 1
    nbrs = [indices[indptr[v]:indptr[v + 1]].tolist() for v in range(n)]
    out: list[list[int]] = []
    if x == 1:
        return np.arange(n, dtype=np.int64).reshape(n, 1)

    def extend(sub: list[int], closed: set[int], ext: list[int], anchor: int) -> None:
        if len(sub) == x:
            out.append(list(sub))
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            fresh = [u for u in nbrs[w] if u > anchor and u not in closed]
            sub.append(w)
            extend(sub, closed.union(nbrs[w]), ext + fresh, anchor)
            sub.pop()

    for v in range(n):
        extend([v], {v, *nbrs[v]}, [w for w in nbrs[v] if w > v], v)
    if not out:
        return np.zeros((0, x), dtype=np.int64)
    return np.asarray(out, dtype=np.int64)


def _ground_layer(subsets, out_indptr, out_indices, out_mult):
    n_sub, x = subsets.shape
    n = len(out_indptr) - 1
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(out_indptr))
    keys = src * n + out_indices
    if len(keys) == 0:
        return np.zeros((n_sub, x, x), dtype=np.int32), np.full((n_sub, x, x), -1, dtype=np.int64)
    qs = subsets[:, :, None] * n + subsets[:, None, :]
    pos_c = np.minimum(np.searchsorted(keys, qs), len(keys) - 1)
    hit = keys[pos_c] == qs
    mult = np.where(hit, out_mult[pos_c], 0).astype(np.int32)
    slot = np.where(hit, pos_c, -1)
    return mult, slot


def _control(mult, wsum, x: int) -> list[list[bool]]:
    ctrl = [[False] * x for _ in range(x)]
    for s in range(x):
        inset = [False] * x
        inset[s] = True
        order = [s]
        acc = [0.0] * x
        head = 0
        while head < len(order):
            y = order[head]
            head += 1
            for z in range(x):
                if mult[y][z] > 0:
                    acc[z] += wsum[y][z]
                    if not inset[z] and acc[z] > CONTROL_THRESHOLD:
                        inset[z] = True
                        order.append(z)
        for z in order[1:]:
            ctrl[s][z] = True
    return ctrl


def local_layers(
    subsets: np.ndarray,
    out_indptr: np.ndarray,
    out_indices: np.ndarray,
    out_mult: np.ndarray,
    out_wsum: np.ndarray,
    out_pos: np.ndarray,
    program: int,
) -> np.ndarray:
    """Codes ``2 * ground_multiplicity + derived`` for every ordered local pair.

    ``program``: 0 none, 1 reachability, 2 control, 3 ultimate controller;
    derived edges come from reasoning on each induced subgraph in isolation.
    """
    mult, slot = _ground_layer(subsets, out_indptr, out_indices, out_mult)
    codes = mult * 2
    n_sub, x = subsets.shape
    if program == 0 or n_sub == 0:
        return codes
    if program == 1:
        adj = np.where(slot >= 0, out_pos[np.maximum(slot, 0)], False)
        reach = adj.copy()
        for m in range(x):
            reach |= reach[:, :, m:m + 1] & reach[:, m:m + 1, :]
        idx = np.arange(x)
        reach[:, idx, idx] = False
        return codes + reach.astype(np.int32)
    wsum = np.where(slot >= 0, out_wsum[np.maximum(slot, 0)], 0.0)
    for t in range(n_sub):
        m_t = mult[t].tolist()
        ctrl = _control(m_t, wsum[t].tolist(), x)
        if program == 3:
            controlled = [any(ctrl[s][z] for s in range(x)) for z in range(x)]
            ctrl = [[ctrl[s][z] and not controlled[s] for z in range(x)] for s in range(x)]
        codes[t] += np.asarray(ctrl, dtype=np.int32)
    return codes


def _match(a, b, va, vb, x: int, first_only: bool) -> list[list[int]]:
    cand = [[j for j in range(x) if va[i] == vb[j] and a[i][i] == b[j][j]] for i in range(x)]
    perm = [-1] * x
    used = [False] * x
    found: list[list[int]] = []

    def go(i: int) -> bool:
        if i == x:
            found.append(perm[:])
            return first_only
        for j in cand[i]:
            if used[j]:
                continue
            ok = True
            for p in range(i):
                q = perm[p]
                if a[i][p] != b[j][q] or a[p][i] != b[q][j]:
                    ok = False
                    break
            if not ok:
                continue
            perm[i] = j
            used[j] = True
            if go(i + 1):
                return True
            used[j] = False
            perm[i] = -1
        return False

    go(0)
    return found


def all_matches(a: np.ndarray, b: np.ndarray, va: np.ndarray, vb: np.ndarray) -> np.ndarray:
    """Every bijection ``p`` with ``a[i, j] == b[p[i], p[j]]``, lexicographic order."""
    x = a.shape[0]
    found = _match(a.tolist(), b.tolist(), va.tolist(), vb.tolist(), x, False)
    if not found:
        return np.zeros((0, x), dtype=np.int64)
    return np.asarray(found, dtype=np.int64)


def bucketize(
    codes: np.ndarray, vkeys: np.ndarray, order: np.ndarray, group_ptr: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Split signature groups into isomorphism classes.

    ``order[group_ptr[g]:group_ptr[g+1]]`` lists the members of group ``g``.
    Returns, per subset, the index of its class representative and the
    position map onto that representative.
    """
    n_sub = codes.shape[0]
    x = codes.shape[1] if codes.ndim == 3 else 0
    rep = np.full(n_sub, -1, dtype=np.int64)
    perm = np.zeros((n_sub, x), dtype=np.int64)
    ident = list(range(x))
    for g in range(len(group_ptr) - 1):
        reps: list[int] = []
        for t in order[group_ptr[g]:group_ptr[g + 1]].tolist():
            a = codes[t].tolist()
            va = vkeys[t].tolist()
            for r in reps:
                found = _match(a, codes[r].tolist(), va, vkeys[r].tolist(), x, True)
                if found:
                    rep[t] = r
                    perm[t] = found[0]
                    break
            else:
                reps.append(t)
                rep[t] = t
                perm[t] = ident
    return rep, perm
