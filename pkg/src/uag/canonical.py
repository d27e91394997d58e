"""Bounded-multiplicity canonical forms of rooted trees and unicyclic graphs.

The trim of a rooted tree at cap ``a`` works bottom-up: at each vertex, group
the child subtrees into isomorphism classes and keep at most ``a`` of each
class. Two structures are a-isomorphic when their trims are isomorphic, and
a-trivial when the trim is a perfect a-ary shape. These invariants are what
bounded-variable logic can see of a large locally tree-like neighborhood.

Canonical codes are length-prefixed byte strings: code(v) is a 4-byte length
followed by the sorted concatenation of child codes (capped at ``a`` per
class when trimming is fused in). Equal codes mean exactly a-isomorphic.
"""

from __future__ import annotations

import struct
from collections import deque

from .graphs import Graph, distances_from, induced_subgraph

_LEN = struct.Struct(">I")


def _pack(payload: bytes) -> bytes:
    return _LEN.pack(len(payload)) + payload


LEAF_CODE = _pack(b"")


class RootedTree:
    """Rooted tree on vertices 1..k with root 1, stored as parent links."""

    __slots__ = ("parent", "_children", "_depth")

    def __init__(self, parent):
        parent = tuple(int(p) for p in parent)
        if not parent:
            raise ValueError("tree must have at least one vertex")
        if parent[0] != 0:
            raise ValueError("vertex 1 must be the root (parent 0)")
        n = len(parent)
        children = [[] for _ in range(n + 1)]
        for v, p in enumerate(parent[1:], start=2):
            if not 1 <= p <= n:
                raise ValueError(f"vertex {v} has parent {p} outside 1..{n}")
            children[p].append(v)
        # reachability from the root certifies acyclicity + connectivity
        seen = 1
        queue = deque([1])
        while queue:
            for w in children[queue.popleft()]:
                seen += 1
                queue.append(w)
        if seen != n:
            raise ValueError("parent links do not form one tree rooted at 1")
        self.parent = parent
        self._children = tuple(tuple(c) for c in children)
        self._depth = None

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return 1

    def children(self, v: int) -> tuple:
        return self._children[v]

    def depths(self) -> list:
        """depth[v] for v = 1..n (index 0 unused)."""
        d = [0] * (self.n + 1)
        queue = deque([1])
        while queue:
            v = queue.popleft()
            for w in self._children[v]:
                d[w] = d[v] + 1
                queue.append(w)
        return d

    def depth(self) -> int:
        if self._depth is None:
            self._depth = max(self.depths()[1:])
        return self._depth

    def __eq__(self, other):
        if not isinstance(other, RootedTree):
            return NotImplemented
        return self.parent == other.parent

    def __hash__(self):
        return hash(self.parent)

    def __repr__(self):
        return f"RootedTree(n={self.n}, depth={self.depth()})"


def tree_from_graph(g: Graph, root: int = 1) -> RootedTree:
    """Root a tree-shaped graph: BFS parents, relabeled so the root is 1.

    Vertices are relabeled in (distance, label) order, matching ball
    extraction, so a ball that is a tree converts with labels unchanged.
    """
    if g.num_edges != g.n - 1:
        raise ValueError("not a tree: wrong edge count")
    dists = distances_from(g, [root])
    if any(dists[v] < 0 for v in g.vertices()):
        raise ValueError("not a tree: disconnected")
    order = sorted(g.vertices(), key=lambda v: (int(dists[v]), v))
    newid = {v: i for i, v in enumerate(order, start=1)}
    parent = [0] * g.n
    for v in g.vertices():
        if v == root:
            continue
        p = min(
            (int(w) for w in g.neighbors(v) if dists[w] == dists[v] - 1),
            default=None,
        )
        if p is None:
            raise ValueError("not a tree")
        parent[newid[v] - 1] = newid[p]
    return RootedTree(parent)


def subtree(t: RootedTree, v: int) -> RootedTree:
    """The subtree of all descendants of v, rooted at v, relabeled 1..k."""
    if not 1 <= v <= t.n:
        raise ValueError(f"vertex {v} out of range")
    order = []
    queue = deque([v])
    while queue:
        u = queue.popleft()
        order.append(u)
        queue.extend(t.children(u))
    newid = {u: i for i, u in enumerate(order, start=1)}
    parent = [0] * len(order)
    for u in order[1:]:
        parent[newid[u] - 1] = newid[t.parent[u - 1]]
    return RootedTree(parent)


def _bottom_up(t: RootedTree) -> list:
    """Vertices ordered deepest first (safe processing order for codes)."""
    depths = t.depths()
    return sorted(range(1, t.n + 1), key=lambda v: -depths[v])


def _codes(t: RootedTree, a) -> list:
    """Canonical code of every subtree; per-class multiplicity capped at a."""
    code = [b""] * (t.n + 1)
    for v in _bottom_up(t):
        kids = sorted(code[w] for w in t.children(v))
        if a is not None:
            kept = []
            run_start = 0
            for i, c in enumerate(kids):
                if kids[run_start] != c:
                    run_start = i
                if i - run_start < a:
                    kept.append(c)
            kids = kept
        code[v] = _pack(b"".join(kids))
    return code


def canon_code(t: RootedTree, a=None) -> bytes:
    """Code of the a-trimmed isomorphism class (plain class when a is None)."""
    if a is not None and a < 1:
        raise ValueError("a must be at least 1")
    return _codes(t, a)[1]


def trim(t: RootedTree, a: int) -> RootedTree:
    """The literal bottom-up surgery: keep at most ``a`` child subtrees per
    isomorphism class (lowest labels survive), then relabel."""
    if a < 1:
        raise ValueError("a must be at least 1")
    code = _codes(t, a)
    removed = [False] * (t.n + 1)
    for v in _bottom_up(t):
        by_class: dict[bytes, list] = {}
        for w in sorted(t.children(v)):
            by_class.setdefault(code[w], []).append(w)
        for members in by_class.values():
            for w in members[a:]:
                removed[w] = True
    # keep v iff no ancestor (or v itself) was removed; relabel by BFS
    order = []
    queue = deque([1])
    while queue:
        v = queue.popleft()
        order.append(v)
        queue.extend(w for w in t.children(v) if not removed[w])
    newid = {v: i for i, v in enumerate(order, start=1)}
    parent = [0] * len(order)
    for v in order[1:]:
        parent[newid[v] - 1] = newid[t.parent[v - 1]]
    return RootedTree(parent)


def isomorphic(t1: RootedTree, t2: RootedTree) -> bool:
    return canon_code(t1) == canon_code(t2)


def a_isomorphic(t1: RootedTree, t2: RootedTree, a: int) -> bool:
    return canon_code(t1, a) == canon_code(t2, a)


def perfect_tree(a: int, depth: int) -> RootedTree:
    """Perfect a-ary rooted tree: every internal vertex has exactly a
    children, every leaf at the given depth."""
    if a < 1 or depth < 0:
        raise ValueError("need a >= 1 and depth >= 0")
    parent = [0]
    level = [1]
    label = 1
    for _ in range(depth):
        nxt = []
        for p in level:
            for _ in range(a):
                label += 1
                parent.append(p)
                nxt.append(label)
        level = nxt
    return RootedTree(parent)


def perfect_code(a: int, depth: int, cap=None) -> bytes:
    """canon_code(perfect_tree(a, depth), cap) without building the tree."""
    if a < 1 or depth < 0:
        raise ValueError("need a >= 1 and depth >= 0")
    width = a if cap is None else min(a, cap)
    code = _pack(b"")
    for _ in range(depth):
        code = _pack(code * width)
    return code


def a_trivial(t: RootedTree, a: int) -> bool:
    """True when the trim of t is the perfect a-ary tree of t's depth."""
    return canon_code(t, a) == perfect_code(a, t.depth(), cap=a)


def is_pendant(g: Graph, verts) -> bool:
    """True when every vertex of the set with internal degree >= 2 has all
    of its graph neighbors inside the set."""
    inside = set(int(v) for v in verts)
    for v in inside:
        g._check_vertex(v)
        nbrs = [int(w) for w in g.neighbors(v)]
        internal = sum(1 for w in nbrs if w in inside)
        if internal >= 2 and any(w not in inside for w in nbrs):
            return False
    return True


class RootedUnicyclic:
    """Connected graph with exactly one cycle, plus a root vertex.

    Decomposes into the cycle, the canonical (lexicographically least)
    shortest path from the root to the cycle, and the trees hanging off
    those vertices.
    """

    __slots__ = ("graph", "root", "_cycle", "_path")

    def __init__(self, graph: Graph, root: int = 1):
        if not 1 <= root <= graph.n:
            raise ValueError("root out of range")
        if graph.num_edges != graph.n:
            raise ValueError("unicyclic graph needs exactly n edges")
        dists = distances_from(graph, [root])
        if any(dists[v] < 0 for v in graph.vertices()):
            raise ValueError("graph is disconnected")
        self.graph = graph
        self.root = root
        self._cycle = None
        self._path = None

    @property
    def n(self) -> int:
        return self.graph.n

    def cycle(self) -> tuple:
        """The unique cycle, in canonical orientation."""
        if self._cycle is None:
            g = self.graph
            deg = list(g.degrees())
            alive = [True] * (g.n + 1)
            queue = deque(v for v in g.vertices() if deg[v] == 1)
            while queue:
                v = queue.popleft()
                alive[v] = False
                for w in g.neighbors(v):
                    w = int(w)
                    if alive[w]:
                        deg[w] -= 1
                        if deg[w] == 1:
                            queue.append(w)
            members = [v for v in g.vertices() if alive[v]]
            start = min(members)
            cyc_nbrs = sorted(int(w) for w in g.neighbors(start) if alive[w])
            cyc = [start, cyc_nbrs[0]]
            while True:
                nxt = [
                    int(w)
                    for w in g.neighbors(cyc[-1])
                    if alive[w] and w != cyc[-2]
                ]
                if nxt[0] == start:
                    break
                cyc.append(nxt[0])
            self._cycle = tuple(cyc)
        return self._cycle

    def root_path(self) -> tuple:
        """Lexicographically least shortest path from the root to the cycle
        (just (root,) when the root lies on the cycle)."""
        if self._path is None:
            g = self.graph
            to_cycle = distances_from(g, list(self.cycle()))
            path = [self.root]
            while to_cycle[path[-1]] > 0:
                here = path[-1]
                path.append(
                    min(
                        int(w)
                        for w in g.neighbors(here)
                        if to_cycle[w] == to_cycle[here] - 1
                    )
                )
            self._path = tuple(path)
        return self._path

    def depth(self) -> int:
        return int(distances_from(self.graph, [self.root]).max())

    def spine(self) -> tuple:
        """Path vertices (excluding the cycle entry) followed by the cycle,
        the cycle rotated to start at the entry vertex."""
        cyc = self.cycle()
        path = self.root_path()
        w = path[-1]
        i = cyc.index(w)
        return path[:-1] + cyc[i:] + cyc[:i]

    def hanging_tree(self, v: int) -> RootedTree:
        """The tree of descendants hanging at spine vertex v."""
        spine = set(self.spine())
        if v not in spine:
            raise ValueError(f"vertex {v} is not on the root path or cycle")
        g = self.graph
        comp = [v]
        seen = {v}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in g.neighbors(u):
                w = int(w)
                if w not in seen and w not in spine:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        sub, _ = induced_subgraph(g, [comp[0]] + sorted(comp[1:]))
        return tree_from_graph(sub, root=1)

    def __repr__(self):
        return f"RootedUnicyclic(n={self.n}, cycle={len(self.cycle())})"


def _unicyclic_parts(c: RootedUnicyclic, a):
    """Codes of every hanging tree along the spine, path part and cycle part."""
    cyc = c.cycle()
    path = c.root_path()
    w = path[-1]
    i = cyc.index(w)
    rotated = cyc[i:] + cyc[:i]
    path_codes = [canon_code(c.hanging_tree(v), a) for v in path[:-1]]
    cycle_codes = [canon_code(c.hanging_tree(v), a) for v in rotated]
    return tuple(path_codes), tuple(cycle_codes)


def unicyclic_code(c: RootedUnicyclic, a=None) -> bytes:
    """Canonical code: cycle length, root distance, path-tree codes, and the
    reflection-minimal cycle-tree code sequence."""
    path_codes, cycle_codes = _unicyclic_parts(c, a)
    # reflection through the entry vertex is the only root-preserving freedom
    fwd = cycle_codes
    rev = (cycle_codes[0],) + tuple(reversed(cycle_codes[1:]))
    best = min(fwd, rev)
    payload = _LEN.pack(len(cycle_codes)) + _LEN.pack(len(path_codes))
    payload += b"".join(path_codes) + b"".join(best)
    return b"U" + payload


def unicyclic_a_isomorphic(c1: RootedUnicyclic, c2: RootedUnicyclic, a: int) -> bool:
    return unicyclic_code(c1, a) == unicyclic_code(c2, a)


def trim_unicyclic(c: RootedUnicyclic, a: int) -> RootedUnicyclic:
    """Replace every hanging tree along the spine by its trim; relabel.

    New labels: spine first (path order, then cycle order), then each trimmed
    hanging tree in order. The root becomes vertex 1.
    """
    if a < 1:
        raise ValueError("a must be at least 1")
    g = c.graph
    spine = c.spine()
    newid = {v: i for i, v in enumerate(spine, start=1)}
    edges = []
    cyc = c.cycle()
    path = c.root_path()
    for u, v in zip(path[:-1], path[1:]):
        edges.append((newid[u], newid[v]))
    for j in range(len(cyc)):
        edges.append((newid[cyc[j]], newid[cyc[(j + 1) % len(cyc)]]))
    label = len(spine)
    for v in spine:
        tt = trim(c.hanging_tree(v), a)
        # graft the trimmed tree back on, its root identified with v
        anchor = {1: newid[v]}
        for child in range(2, tt.n + 1):
            label += 1
            anchor[child] = label
            edges.append((anchor[tt.parent[child - 1]], anchor[child]))
    sub = Graph(label, sorted((min(u, v), max(u, v)) for u, v in edges))
    return RootedUnicyclic(sub, root=1)


def perfect_unicyclic_code(
    cycle_len: int, root_dist: int, depth: int, a: int, cap=None
) -> bytes:
    """Code of the perfect a-ary unicyclic graph with the given shape: every
    spine vertex v carries a perfect a-ary tree of depth (depth - dist(v))."""
    if cycle_len < 3:
        raise ValueError("cycle length must be at least 3")
    if root_dist < 0 or depth < root_dist + cycle_len // 2:
        raise ValueError("depth cannot reach around the cycle")
    path_codes = tuple(
        perfect_code(a, depth - i, cap=cap) for i in range(root_dist)
    )
    cycle_codes = tuple(
        perfect_code(a, depth - root_dist - min(j, cycle_len - j), cap=cap)
        for j in range(cycle_len)
    )
    payload = _LEN.pack(len(cycle_codes)) + _LEN.pack(len(path_codes))
    payload += b"".join(path_codes) + b"".join(cycle_codes)
    return b"U" + payload


def unicyclic_a_trivial(c: RootedUnicyclic, a: int) -> bool:
    """True when every hanging tree trims to the perfect a-ary tree of the
    depth forced by its spine position."""
    cyc = c.cycle()
    path = c.root_path()
    d = c.depth()
    try:
        expect = perfect_unicyclic_code(len(cyc), len(path) - 1, d, a, cap=a)
    except ValueError:
        return False
    return unicyclic_code(c, a) == expect


def write_tree(t: RootedTree, file) -> None:
    """Text form: a line with the vertex count, then "child parent" lines."""
    if isinstance(file, (str, bytes)) or hasattr(file, "__fspath__"):
        with open(file, "w") as f:
            write_tree(t, f)
        return
    file.write(f"{t.n}\n")
    for v in range(2, t.n + 1):
        file.write(f"{v} {t.parent[v - 1]}\n")


def read_tree(file) -> RootedTree:
    """Read the format written by write_tree (root is vertex 1)."""
    if isinstance(file, (str, bytes)) or hasattr(file, "__fspath__"):
        with open(file) as f:
            return read_tree(f)
    k = int(file.readline())
    parent = [0] * k
    for line in file:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise ValueError(f"bad tree line: {line!r}")
        child, par = int(parts[0]), int(parts[1])
        if not 2 <= child <= k:
            raise ValueError(f"child {child} out of range 2..{k}")
        if parent[child - 1]:
            raise ValueError(f"vertex {child} listed twice")
        parent[child - 1] = par
    return RootedTree(parent)
