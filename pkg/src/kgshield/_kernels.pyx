# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot kernels; see _pykernels for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32

cdef double CONTROL_THRESHOLD = 0.5


cdef void _extend(
    const i64[::1] indptr, const i64[::1] indices, int x, i64 anchor,
    vector[i64]& sub, vector[i32]& closed, vector[i64]& ext, vector[i64]& out,
) noexcept nogil:
    cdef size_t depth = sub.size()
    cdef vector[i64] rest
    cdef vector[i64] nxt
    cdef i64 w, u, p
    if <int>depth == x:
        for p in range(<i64>depth):
            out.push_back(sub[p])
        return
    rest = ext
    while rest.size() > 0:
        w = rest.back()
        rest.pop_back()
        nxt = rest
        for p in range(indptr[w], indptr[w + 1]):
            u = indices[p]
            if u > anchor and closed[u] == 0:
                nxt.push_back(u)
        for p in range(indptr[w], indptr[w + 1]):
            closed[indices[p]] += 1
        sub.push_back(w)
        _extend(indptr, indices, x, anchor, sub, closed, nxt, out)
        sub.pop_back()
        for p in range(indptr[w], indptr[w + 1]):
            closed[indices[p]] -= 1


def connected_subsets(indptr, indices, int x):
    cdef const i64[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const i64[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef i64 n = ip.shape[0] - 1
    if x == 1:
        return np.arange(n, dtype=np.int64).reshape(n, 1)
    cdef vector[i32] closed = vector[i32](n, 0)
    cdef vector[i64] sub
    cdef vector[i64] ext
    cdef vector[i64] out
    cdef i64 v, p
    with nogil:
        for v in range(n):
            closed[v] += 1
            for p in range(ip[v], ip[v + 1]):
                closed[ix[p]] += 1
            ext.clear()
            for p in range(ip[v], ip[v + 1]):
                if ix[p] > v:
                    ext.push_back(ix[p])
            sub.clear()
            sub.push_back(v)
            _extend(ip, ix, x, v, sub, closed, ext, out)
            closed[v] -= 1
            for p in range(ip[v], ip[v + 1]):
                closed[ix[p]] -= 1
    cdef i64 total = <i64>out.size()
    res = np.empty(total, dtype=np.int64)
    cdef i64[::1] rv = res
    for p in range(total):
        rv[p] = out[p]
    return res.reshape(total // x, x)


cdef i64 _find(const i64[::1] indptr, const i64[::1] indices, i64 s, i64 t) noexcept nogil:
    cdef i64 lo = indptr[s], hi = indptr[s + 1], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    if lo < indptr[s + 1] and indices[lo] == t:
        return lo
    return -1


def local_layers(subsets, out_indptr, out_indices, out_mult, out_wsum, out_pos, int program):
    cdef const i64[:, ::1] sb = np.ascontiguousarray(subsets, dtype=np.int64)
    cdef const i64[::1] ip = np.ascontiguousarray(out_indptr, dtype=np.int64)
    cdef const i64[::1] ix = np.ascontiguousarray(out_indices, dtype=np.int64)
    cdef const i64[::1] mu = np.ascontiguousarray(out_mult, dtype=np.int64)
    cdef const double[::1] ws = np.ascontiguousarray(out_wsum, dtype=np.float64)
    cdef const cnp.uint8_t[::1] po = np.ascontiguousarray(out_pos, dtype=np.uint8)
    cdef i64 n_sub = sb.shape[0]
    cdef int x = sb.shape[1]
    codes = np.zeros((n_sub, x, x), dtype=np.int32)
    cdef i32[:, :, ::1] cv = codes
    cdef vector[i64] slot = vector[i64](x * x)
    cdef vector[char] rel = vector[char](x * x)
    cdef vector[char] inset = vector[char](x)
    cdef vector[char] controlled = vector[char](x)
    cdef vector[double] acc = vector[double](x)
    cdef vector[int] order
    cdef i64 t, q
    cdef int i, j, m, s, y, z, head
    with nogil:
        for t in range(n_sub):
            for i in range(x):
                for j in range(x):
                    q = _find(ip, ix, sb[t, i], sb[t, j])
                    slot[i * x + j] = q
                    cv[t, i, j] = 2 * mu[q] if q >= 0 else 0
            if program == 0:
                continue
            for i in range(x * x):
                rel[i] = 0
            if program == 1:
                for i in range(x * x):
                    q = slot[i]
                    if q >= 0 and po[q] != 0:
                        rel[i] = 1
                for m in range(x):
                    for i in range(x):
                        if rel[i * x + m]:
                            for j in range(x):
                                if rel[m * x + j]:
                                    rel[i * x + j] = 1
            else:
                for s in range(x):
                    for i in range(x):
                        inset[i] = 0
                        acc[i] = 0.0
                    inset[s] = 1
                    order.clear()
                    order.push_back(s)
                    head = 0
                    while head < <int>order.size():
                        y = order[head]
                        head += 1
                        for z in range(x):
                            q = slot[y * x + z]
                            if q >= 0:
                                acc[z] += ws[q]
                                if not inset[z] and acc[z] > CONTROL_THRESHOLD:
                                    inset[z] = 1
                                    order.push_back(z)
                    for i in range(1, <int>order.size()):
                        rel[s * x + order[i]] = 1
                if program == 3:
                    for z in range(x):
                        controlled[z] = 0
                        for s in range(x):
                            if s != z and rel[s * x + z]:
                                controlled[z] = 1
                    for s in range(x):
                        if controlled[s]:
                            for z in range(x):
                                rel[s * x + z] = 0
            for i in range(x):
                rel[i * x + i] = 0
            for i in range(x):
                for j in range(x):
                    cv[t, i, j] += rel[i * x + j]
    return codes


cdef int _match(
    const i32[:, ::1] a, const i32[:, ::1] b, const i64[::1] va, const i64[::1] vb,
    int x, bint first_only, vector[int]& perm, vector[char]& used, int i, vector[i64]& found,
) noexcept nogil:
    # returns 1 to stop the search
    cdef int j, p, q, ok
    if i == x:
        for p in range(x):
            found.push_back(perm[p])
        return 1 if first_only else 0
    for j in range(x):
        if used[j] or va[i] != vb[j] or a[i, i] != b[j, j]:
            continue
        ok = 1
        for p in range(i):
            q = perm[p]
            if a[i, p] != b[j, q] or a[p, i] != b[q, j]:
                ok = 0
                break
        if not ok:
            continue
        perm[i] = j
        used[j] = 1
        if _match(a, b, va, vb, x, first_only, perm, used, i + 1, found):
            return 1
        used[j] = 0
        perm[i] = -1
    return 0


def all_matches(a, b, va, vb):
    cdef const i32[:, ::1] av = np.ascontiguousarray(a, dtype=np.int32)
    cdef const i32[:, ::1] bv = np.ascontiguousarray(b, dtype=np.int32)
    cdef const i64[::1] vav = np.ascontiguousarray(va, dtype=np.int64)
    cdef const i64[::1] vbv = np.ascontiguousarray(vb, dtype=np.int64)
    cdef int x = av.shape[0]
    cdef vector[int] perm = vector[int](x, -1)
    cdef vector[char] used = vector[char](x, 0)
    cdef vector[i64] found
    _match(av, bv, vav, vbv, x, False, perm, used, 0, found)
    cdef i64 total = <i64>found.size()
    res = np.empty(total, dtype=np.int64)
    cdef i64[::1] rv = res
    cdef i64 p
    for p in range(total):
        rv[p] = found[p]
    return res.reshape(total // x if x else 0, x)


def bucketize(codes, vkeys, order, group_ptr):
    cdef const i32[:, :, ::1] cv = np.ascontiguousarray(codes, dtype=np.int32)
    cdef const i64[:, ::1] vk = np.ascontiguousarray(vkeys, dtype=np.int64)
    cdef const i64[::1] od = np.ascontiguousarray(order, dtype=np.int64)
    cdef const i64[::1] gp = np.ascontiguousarray(group_ptr, dtype=np.int64)
    cdef i64 n_sub = cv.shape[0]
    cdef int x = cv.shape[1] if n_sub > 0 else 0
    rep = np.full(n_sub, -1, dtype=np.int64)
    perm_out = np.zeros((n_sub, x), dtype=np.int64)
    cdef i64[::1] rv = rep
    cdef i64[:, ::1] pv = perm_out
    cdef vector[i64] reps
    cdef vector[int] perm = vector[int](x, -1)
    cdef vector[char] used = vector[char](x, 0)
    cdef vector[i64] found
    cdef i64 g, k, t, r, ri
    cdef int p, matched
    with nogil:
        for g in range(gp.shape[0] - 1):
            reps.clear()
            for k in range(gp[g], gp[g + 1]):
                t = od[k]
                matched = 0
                for ri in range(<i64>reps.size()):
                    r = reps[ri]
                    found.clear()
                    for p in range(x):
                        perm[p] = -1
                        used[p] = 0
                    _match(cv[t], cv[r], vk[t], vk[r], x, True, perm, used, 0, found)
                    if found.size() > 0:
                        rv[t] = r
                        for p in range(x):
                            pv[t, p] = found[p]
                        matched = 1
                        break
                if not matched:
                    reps.push_back(t)
                    rv[t] = t
                    for p in range(x):
                        pv[t, p] = p
    return rep, perm_out
