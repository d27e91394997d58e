"""Pure-Python kernel lane.

Same contract as the compiled lane in ``_ckern``: identical function names,
argument conventions, and, for the randomized kernels, an identical draw
sequence, so the two lanes are interchangeable bit for bit. Graphs are CSR
over vertices 1..n (slot 0 unused): ``indptr`` is int64 of length n+2 and
``nbrs`` is int32 with each adjacency list sorted ascending.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .rng import GOLDEN, MASK64, mix64

IS_COMPILED = False


def attach_block(state: int, v_lo: int, v_hi: int, m: int):
    """Attachment edges for new vertices v_lo..v_hi, one step per vertex.

    Vertex v picks m distinct uniform neighbors in [1, v-1] by Floyd's
    algorithm, consuming one bounded draw per j = v-m .. v-1 from the
    SplitMix64 counter ``state``. Returns (new_state, edges) with edges int32
    of shape (steps*m, 2), each row (t, v) with the m targets ascending.
    """
    steps = v_hi - v_lo + 1
    edges = np.empty((steps * m, 2), dtype=np.int32)
    span = MASK64 + 1
    k = 0
    for v in range(v_lo, v_hi + 1):
        chosen: set[int] = set()
        for j in range(v - m, v):
            limit = span - span % j
            while True:
                state = (state + GOLDEN) & MASK64
                x = mix64(state)
                if x < limit:
                    break
            t = 1 + x % j
            chosen.add(j if t in chosen else t)
        for t in sorted(chosen):
            edges[k, 0] = t
            edges[k, 1] = v
            k += 1
    return state, edges


def bfs_dists(indptr, nbrs, sources, cap: int):
    """BFS distances from a set of sources; -1 where unreached.

    ``sources`` is an int32 array of start vertices, ``cap`` bounds the
    explored radius (-1 for no bound). Returns int32 of length n+1.
    """
    n = len(indptr) - 2
    dist = np.full(n + 1, -1, dtype=np.int32)
    queue = deque()
    for s in sources:
        s = int(s)
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if cap >= 0 and du >= cap:
            continue
        for w in nbrs[indptr[u] : indptr[u + 1]]:
            if dist[w] < 0:
                dist[w] = du + 1
                queue.append(int(w))
    return dist


def set_distance(indptr, nbrs, sources, targets) -> int:
    """Distance from the source set to the target set; -1 if unreachable."""
    n = len(indptr) - 2
    is_target = np.zeros(n + 1, dtype=bool)
    is_target[np.asarray(targets, dtype=np.int64)] = True
    dist = np.full(n + 1, -1, dtype=np.int32)
    queue = deque()
    for s in sources:
        s = int(s)
        if is_target[s]:
            return 0
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        for w in nbrs[indptr[u] : indptr[u + 1]]:
            if dist[w] < 0:
                if is_target[w]:
                    return du + 1
                dist[w] = du + 1
                queue.append(int(w))
    return -1


def cycles_upto(indptr, nbrs, a: int, min_excl: int):
    """All simple cycles on at most ``a`` vertices, each vertex > min_excl.

    Every cycle is emitted once, in canonical orientation: starting at its
    smallest vertex s, continuing toward the smaller of s's two neighbors on
    the cycle. Returns (lengths, verts): int32 cycle lengths and the
    concatenated vertex sequences.
    """
    n = len(indptr) - 2
    lengths: list[int] = []
    verts: list[int] = []
    if a < 3:
        return (np.array(lengths, np.int32), np.array(verts, np.int32))
    path = [0] * a

    def descend(s: int, v: int, depth: int) -> None:
        # path[0..depth-1] is a simple path from s; try to extend at v
        for w in nbrs[indptr[v] : indptr[v + 1]]:
            w = int(w)
            if w == s and depth >= 3 and path[1] < path[depth - 1]:
                lengths.append(depth)
                verts.extend(path[:depth])
            elif w > s and depth < a and w not in path[:depth]:
                path[depth] = w
                descend(s, w, depth + 1)

    for s in range(min_excl + 1, n + 1):
        path[0] = s
        descend(s, s, 1)
    return (np.array(lengths, np.int32), np.array(verts, np.int32))


def cycle_probe(indptr, nbrs, max_len: int, sources):
    """Short cycles detected by capped BFS from each source vertex.

    Runs a BFS of depth max_len//2 from every source, extracts a cycle for
    each non-tree edge encountered, and emits every extracted walk of
    length 3..max_len as a raw vertex sequence: duplicates across sources
    (and orientations) are the caller's to collapse. Whenever the graph has
    a cycle of length <= max_len through any source, at least one cycle is
    emitted, so an empty result over all vertices certifies girth > max_len.
    Returns (lengths, verts) in the same shape as cycles_upto.
    """
    cap = max_len // 2
    lengths: list[int] = []
    verts: list[int] = []
    dist: dict[int, int] = {}
    parent: dict[int, int] = {}
    for s in sources:
        s = int(s)
        dist.clear()
        parent.clear()
        dist[s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            dx = dist[x]
            for w in nbrs[indptr[x] : indptr[x + 1]]:
                w = int(w)
                if w not in dist:
                    if dx < cap:
                        dist[w] = dx + 1
                        parent[w] = x
                        queue.append(w)
                    continue
                if parent.get(w) == x or parent.get(x) == w or w < x:
                    continue
                if dx + dist[w] + 1 > max_len:
                    continue
                a, b = x, w
                pa, pb = [x], [w]
                while dist[a] > dist[b]:
                    a = parent[a]
                    pa.append(a)
                while dist[b] > dist[a]:
                    b = parent[b]
                    pb.append(b)
                while a != b:
                    a = parent[a]
                    b = parent[b]
                    pa.append(a)
                    pb.append(b)
                cycle = pa + pb[-2::-1]
                if 3 <= len(cycle) <= max_len:
                    lengths.append(len(cycle))
                    verts.extend(cycle)
    return (np.array(lengths, np.int32), np.array(verts, np.int32))


def _adjacent(indptr, nbrs, u: int, v: int) -> bool:
    lo = int(indptr[u])
    hi = int(indptr[u + 1])
    i = int(np.searchsorted(nbrs[lo:hi], v))
    return i < hi - lo and int(nbrs[lo + i]) == v


def eval_formula(kind, arg1, arg2, root: int, env, indptr, nbrs, n: int) -> bool:
    """Evaluate a compiled formula over the graph, mutating env in place.

    Node kinds: 0 adj, 1 eq, 2 not, 3 and, 4 or, 5 implies, 6 iff,
    7 exists, 8 forall. For atoms arg1/arg2 are variable slots; for
    quantifiers arg1 is the slot and arg2 the body node.
    """

    def rec(i: int) -> bool:
        k = kind[i]
        if k == 0:
            return _adjacent(indptr, nbrs, int(env[arg1[i]]), int(env[arg2[i]]))
        if k == 1:
            return env[arg1[i]] == env[arg2[i]]
        if k == 2:
            return not rec(arg1[i])
        if k == 3:
            return rec(arg1[i]) and rec(arg2[i])
        if k == 4:
            return rec(arg1[i]) or rec(arg2[i])
        if k == 5:
            return (not rec(arg1[i])) or rec(arg2[i])
        if k == 6:
            return rec(arg1[i]) == rec(arg2[i])
        slot = arg1[i]
        body = arg2[i]
        saved = env[slot]
        want = k == 7  # exists stops on True, forall on False
        for v in range(1, n + 1):
            env[slot] = v
            if rec(body) == want:
                env[slot] = saved
                return want
        env[slot] = saved
        return not want

    return bool(rec(root))
