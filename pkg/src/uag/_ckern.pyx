# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel lane.

Same contract as the pure lane in ``_pykern``: identical function names,
argument conventions, and, for the randomized kernels, an identical draw
sequence, so the two lanes are interchangeable bit for bit. Graphs are CSR
over vertices 1..n (slot 0 unused): ``indptr`` is int64 of length n+2 and
``nbrs`` is int32 with each adjacency list sorted ascending.
"""

from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

IS_COMPILED = True

cdef uint64_t MASK64 = <uint64_t>0xFFFFFFFFFFFFFFFF
cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def attach_block(state, int v_lo, int v_hi, int m):
    """Attachment edges for new vertices v_lo..v_hi, one step per vertex.

    Vertex v picks m distinct uniform neighbors in [1, v-1] by Floyd's
    algorithm, consuming one bounded draw per j = v-m .. v-1 from the
    SplitMix64 counter ``state``. Returns (new_state, edges) with edges int32
    of shape (steps*m, 2), each row (t, v) with the m targets ascending.
    """
    cdef uint64_t st = <uint64_t>(state & ((1 << 64) - 1))
    cdef int steps = v_hi - v_lo + 1
    edges_arr = np.empty((steps * m, 2), dtype=np.int32)
    cdef int32_t[:, ::1] edges = edges_arr
    cdef int64_t k = 0
    cdef int v, j, c, i, p
    cdef uint64_t x, rem, uj
    cdef int32_t t, tmp
    cdef int32_t *ch = <int32_t *>malloc(m * sizeof(int32_t))
    if ch == NULL:
        raise MemoryError()
    try:
        for v in range(v_lo, v_hi + 1):
            c = 0
            for j in range(v - m, v):
                uj = <uint64_t>j
                # accept x below 2^64 - (2^64 mod j): exact rejection sampling
                rem = ((MASK64 % uj) + 1) % uj
                while True:
                    st += GOLDEN
                    x = mix64(st)
                    if x <= MASK64 - rem:
                        break
                t = <int32_t>(1 + x % uj)
                for i in range(c):
                    if ch[i] == t:
                        t = <int32_t>j
                        break
                ch[c] = t
                c += 1
            # insertion sort: m is tiny
            for i in range(1, c):
                tmp = ch[i]
                p = i - 1
                while p >= 0 and ch[p] > tmp:
                    ch[p + 1] = ch[p]
                    p -= 1
                ch[p + 1] = tmp
            for i in range(c):
                edges[k, 0] = ch[i]
                edges[k, 1] = v
                k += 1
    finally:
        free(ch)
    return int(st), edges_arr


def bfs_dists(const int64_t[::1] indptr, const int32_t[::1] nbrs, sources, int cap):
    """BFS distances from a set of sources; -1 where unreached.

    ``sources`` is an int32 array of start vertices, ``cap`` bounds the
    explored radius (-1 for no bound). Returns int32 of length n+1.
    """
    cdef int n = <int>(indptr.shape[0] - 2)
    dist_arr = np.full(n + 1, -1, dtype=np.int32)
    cdef int32_t[::1] dist = dist_arr
    cdef const int32_t[::1] src = np.ascontiguousarray(sources, dtype=np.int32)
    cdef int32_t *queue = <int32_t *>malloc((n + 1) * sizeof(int32_t))
    if queue == NULL:
        raise MemoryError()
    cdef int head = 0, tail = 0
    cdef int i, u, du
    cdef int64_t e
    cdef int32_t w
    try:
        for i in range(src.shape[0]):
            u = src[i]
            if dist[u] < 0:
                dist[u] = 0
                queue[tail] = u
                tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            if cap >= 0 and du >= cap:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                w = nbrs[e]
                if dist[w] < 0:
                    dist[w] = du + 1
                    queue[tail] = w
                    tail += 1
    finally:
        free(queue)
    return dist_arr


def set_distance(const int64_t[::1] indptr, const int32_t[::1] nbrs, sources, targets):
    """Distance from the source set to the target set; -1 if unreachable."""
    cdef int n = <int>(indptr.shape[0] - 2)
    cdef const int32_t[::1] src = np.ascontiguousarray(sources, dtype=np.int32)
    cdef const int32_t[::1] tgt = np.ascontiguousarray(targets, dtype=np.int32)
    cdef int32_t *dist = <int32_t *>malloc((n + 1) * sizeof(int32_t))
    cdef int8_t *is_tgt = <int8_t *>malloc((n + 1) * sizeof(int8_t))
    cdef int32_t *queue = <int32_t *>malloc((n + 1) * sizeof(int32_t))
    if dist == NULL or is_tgt == NULL or queue == NULL:
        free(dist); free(is_tgt); free(queue)
        raise MemoryError()
    cdef int head = 0, tail = 0
    cdef int i, u, du, out = -1
    cdef int64_t e
    cdef int32_t w
    try:
        for i in range(n + 1):
            dist[i] = -1
            is_tgt[i] = 0
        for i in range(tgt.shape[0]):
            is_tgt[tgt[i]] = 1
        for i in range(src.shape[0]):
            u = src[i]
            if is_tgt[u]:
                return 0
            if dist[u] < 0:
                dist[u] = 0
                queue[tail] = u
                tail += 1
        while head < tail and out < 0:
            u = queue[head]
            head += 1
            du = dist[u]
            for e in range(indptr[u], indptr[u + 1]):
                w = nbrs[e]
                if dist[w] < 0:
                    if is_tgt[w]:
                        out = du + 1
                        break
                    dist[w] = du + 1
                    queue[tail] = w
                    tail += 1
    finally:
        free(dist)
        free(is_tgt)
        free(queue)
    return out


def cycles_upto(const int64_t[::1] indptr, const int32_t[::1] nbrs, int a, int min_excl):
    """All simple cycles on at most ``a`` vertices, each vertex > min_excl.

    Every cycle is emitted once, in canonical orientation: starting at its
    smallest vertex s, continuing toward the smaller of s's two neighbors on
    the cycle. Returns (lengths, verts): int32 cycle lengths and the
    concatenated vertex sequences.
    """
    cdef int n = <int>(indptr.shape[0] - 2)
    lengths = []
    verts = []
    if a < 3:
        return (np.array(lengths, np.int32), np.array(verts, np.int32))
    cdef int32_t *path = <int32_t *>malloc(a * sizeof(int32_t))
    cdef int64_t *idx = <int64_t *>malloc((a + 1) * sizeof(int64_t))
    if path == NULL or idx == NULL:
        free(path); free(idx)
        raise MemoryError()
    cdef int s, depth, v, i, hit
    cdef int32_t w
    try:
        for s in range(min_excl + 1, n + 1):
            path[0] = s
            depth = 1
            idx[1] = indptr[s]
            while depth >= 1:
                v = path[depth - 1]
                if idx[depth] >= indptr[v + 1]:
                    depth -= 1
                    continue
                w = nbrs[idx[depth]]
                idx[depth] += 1
                if w == s and depth >= 3 and path[1] < path[depth - 1]:
                    lengths.append(depth)
                    for i in range(depth):
                        verts.append(path[i])
                elif w > s and depth < a:
                    hit = 0
                    for i in range(depth):
                        if path[i] == w:
                            hit = 1
                            break
                    if not hit:
                        path[depth] = w
                        idx[depth + 1] = indptr[w]
                        depth += 1
    finally:
        free(path)
        free(idx)
    return (np.array(lengths, np.int32), np.array(verts, np.int32))


def cycle_probe(const int64_t[::1] indptr, const int32_t[::1] nbrs, int max_len, sources):
    """Short cycles detected by capped BFS from each source vertex.

    Runs a BFS of depth max_len//2 from every source, extracts a cycle for
    each non-tree edge encountered, and emits every extracted walk of
    length 3..max_len as a raw vertex sequence: duplicates across sources
    (and orientations) are the caller's to collapse. Whenever the graph has
    a cycle of length <= max_len through any source, at least one cycle is
    emitted, so an empty result over all vertices certifies girth > max_len.
    Returns (lengths, verts) in the same shape as cycles_upto.
    """
    cdef int n = <int>(indptr.shape[0] - 2)
    cdef int cap = max_len // 2
    cdef const int32_t[::1] src = np.ascontiguousarray(sources, dtype=np.int32)
    lengths = []
    verts = []
    cdef int32_t *dist = <int32_t *>malloc((n + 1) * sizeof(int32_t))
    cdef int32_t *parent = <int32_t *>malloc((n + 1) * sizeof(int32_t))
    cdef int32_t *queue = <int32_t *>malloc((n + 1) * sizeof(int32_t))
    cdef int32_t *pa = <int32_t *>malloc((cap + 2) * sizeof(int32_t))
    cdef int32_t *pb = <int32_t *>malloc((cap + 2) * sizeof(int32_t))
    if dist == NULL or parent == NULL or queue == NULL or pa == NULL or pb == NULL:
        free(dist); free(parent); free(queue); free(pa); free(pb)
        raise MemoryError()
    cdef int si, s, head, tail, x, dx, i, na, nb, clen
    cdef int32_t w, va, vb
    cdef int64_t e
    try:
        for i in range(n + 1):
            dist[i] = -1
            parent[i] = 0
        for si in range(src.shape[0]):
            s = src[si]
            dist[s] = 0
            queue[0] = s
            head, tail = 0, 1
            while head < tail:
                x = queue[head]
                head += 1
                dx = dist[x]
                for e in range(indptr[x], indptr[x + 1]):
                    w = nbrs[e]
                    if dist[w] < 0:
                        if dx < cap:
                            dist[w] = dx + 1
                            parent[w] = x
                            queue[tail] = w
                            tail += 1
                        continue
                    if parent[w] == x or parent[x] == w or w < x:
                        continue
                    if dx + dist[w] + 1 > max_len:
                        continue
                    va, vb = x, w
                    pa[0] = x
                    pb[0] = w
                    na, nb = 1, 1
                    while dist[va] > dist[vb]:
                        va = parent[va]
                        pa[na] = va
                        na += 1
                    while dist[vb] > dist[va]:
                        vb = parent[vb]
                        pb[nb] = vb
                        nb += 1
                    while va != vb:
                        va = parent[va]
                        vb = parent[vb]
                        pa[na] = va
                        pb[nb] = vb
                        na += 1
                        nb += 1
                    clen = na + nb - 1
                    if 3 <= clen <= max_len:
                        lengths.append(clen)
                        for i in range(na):
                            verts.append(pa[i])
                        for i in range(nb - 2, -1, -1):
                            verts.append(pb[i])
            # reset only the vertices this source touched
            for i in range(tail):
                dist[queue[i]] = -1
                parent[queue[i]] = 0
    finally:
        free(dist)
        free(parent)
        free(queue)
        free(pa)
        free(pb)
    return (np.array(lengths, np.int32), np.array(verts, np.int32))


cdef inline bint _adjacent(const int64_t[::1] indptr, const int32_t[::1] nbrs,
                           int u, int v) nogil:
    cdef int64_t lo = indptr[u]
    cdef int64_t hi = indptr[u + 1]
    cdef int64_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if nbrs[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and nbrs[lo] == v


cdef int _eval_rec(const int8_t[::1] kind, const int32_t[::1] arg1,
                   const int32_t[::1] arg2, int i, int32_t[::1] env,
                   const int64_t[::1] indptr, const int32_t[::1] nbrs,
                   int n) except -1:
    cdef int k = kind[i]
    cdef int slot, body, v, want
    cdef int32_t saved
    if k == 0:
        return _adjacent(indptr, nbrs, env[arg1[i]], env[arg2[i]])
    if k == 1:
        return env[arg1[i]] == env[arg2[i]]
    if k == 2:
        return not _eval_rec(kind, arg1, arg2, arg1[i], env, indptr, nbrs, n)
    if k == 3:
        return (_eval_rec(kind, arg1, arg2, arg1[i], env, indptr, nbrs, n)
                and _eval_rec(kind, arg1, arg2, arg2[i], env, indptr, nbrs, n))
    if k == 4:
        return (_eval_rec(kind, arg1, arg2, arg1[i], env, indptr, nbrs, n)
                or _eval_rec(kind, arg1, arg2, arg2[i], env, indptr, nbrs, n))
    if k == 5:
        return ((not _eval_rec(kind, arg1, arg2, arg1[i], env, indptr, nbrs, n))
                or _eval_rec(kind, arg1, arg2, arg2[i], env, indptr, nbrs, n))
    if k == 6:
        return (_eval_rec(kind, arg1, arg2, arg1[i], env, indptr, nbrs, n)
                == _eval_rec(kind, arg1, arg2, arg2[i], env, indptr, nbrs, n))
    slot = arg1[i]
    body = arg2[i]
    saved = env[slot]
    want = 1 if k == 7 else 0  # exists stops on True, forall on False
    for v in range(1, n + 1):
        env[slot] = v
        if _eval_rec(kind, arg1, arg2, body, env, indptr, nbrs, n) == want:
            env[slot] = saved
            return want
    env[slot] = saved
    return not want


def eval_formula(const int8_t[::1] kind, const int32_t[::1] arg1,
                 const int32_t[::1] arg2, int root, int32_t[::1] env,
                 const int64_t[::1] indptr, const int32_t[::1] nbrs, int n):
    """Evaluate a compiled formula over the graph, mutating env in place.

    Node kinds: 0 adj, 1 eq, 2 not, 3 and, 4 or, 5 implies, 6 iff,
    7 exists, 8 forall. For atoms arg1/arg2 are variable slots; for
    quantifiers arg1 is the slot and arg2 the body node.
    """
    return bool(_eval_rec(kind, arg1, arg2, root, env, indptr, nbrs, n))
