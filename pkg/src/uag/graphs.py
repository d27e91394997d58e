"""Uniform attachment graphs and basic graph operations.

The growth process: start from a complete graph on [m], then each new vertex
v = m+1, m+2, ... joins by edges to m distinct uniformly random vertices of
[v-1]. Multigraphs never arise; every graph here is simple and undirected,
with vertices labeled 1..n.

Graphs are immutable CSR (sorted adjacency). Randomness comes from
``rng.Stream`` so a generated graph is a pure function of (n, m, seed), and
``generate`` is replayable step by step with ``attach_step``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import Stream


@dataclass(frozen=True)
class GenParams:
    """Parameters of the attachment process."""

    n: int
    m: int
    seed: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n < self.m:
            raise ValueError("n must be at least m")


class Graph:
    """Immutable simple undirected graph on vertices 1..n."""

    __slots__ = ("n", "m_hint", "_indptr", "_nbrs")

    def __init__(self, n: int, edges, m_hint: int = 0, _trusted: bool = False):
        """Build from an iterable/array of (u, v) pairs.

        With _trusted the edges are taken as already validated: no loops, no
        duplicates (in either direction), endpoints in range.
        """
        if n < 0:
            raise ValueError("n must be nonnegative")
        e = np.asarray(edges, dtype=np.int32).reshape(-1, 2)
        if not _trusted and len(e):
            if e.min() < 1 or e.max() > n:
                raise ValueError("edge endpoint out of range")
            if (e[:, 0] == e[:, 1]).any():
                raise ValueError("self-loop")
        both = np.concatenate([e, e[:, ::-1]]) if len(e) else e
        order = np.lexsort((both[:, 1], both[:, 0])) if len(e) else []
        dst = both[order, 1] if len(e) else np.empty(0, np.int32)
        src = both[order, 0] if len(e) else np.empty(0, np.int32)
        if not _trusted and len(e):
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                raise ValueError("duplicate edge")
        counts = np.bincount(src, minlength=n + 2)[: n + 2]
        indptr = np.zeros(n + 2, dtype=np.int64)
        np.cumsum(counts[:-1], out=indptr[1:])
        self.n = n
        self.m_hint = m_hint
        self._indptr = indptr
        self._nbrs = dst
        self._indptr.flags.writeable = False
        self._nbrs.flags.writeable = False

    @property
    def num_edges(self) -> int:
        return len(self._nbrs) // 2

    def vertices(self) -> range:
        return range(1, self.n + 1)

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self._indptr[v + 1] - self._indptr[v])

    def degrees(self) -> np.ndarray:
        """Degree of every vertex; index 0 is unused and zero."""
        return np.diff(self._indptr)

    def neighbors(self, v: int) -> np.ndarray:
        self._check_vertex(v)
        return self._nbrs[self._indptr[v] : self._indptr[v + 1]]

    def adjacent(self, u: int, v: int) -> bool:
        self._check_vertex(u)
        self._check_vertex(v)
        row = self._nbrs[self._indptr[u] : self._indptr[u + 1]]
        i = int(np.searchsorted(row, v))
        return i < len(row) and int(row[i]) == v

    def edges(self):
        """All edges as (u, v) with u < v, in lexicographic order."""
        for u in range(1, self.n + 1):
            for w in self._nbrs[self._indptr[u] : self._indptr[u + 1]]:
                if w > u:
                    yield (u, int(w))

    def edge_array(self) -> np.ndarray:
        """Edges as an int32 array of shape (num_edges, 2), u < v, sorted."""
        src = np.repeat(
            np.arange(self.n + 1, dtype=np.int32), np.diff(self._indptr)[: self.n + 1]
        )
        keep = src < self._nbrs
        return np.column_stack([src[keep], self._nbrs[keep]])

    def _check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise ValueError(f"vertex {v} out of range 1..{self.n}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and len(self._nbrs) == len(other._nbrs)
            and bool(np.array_equal(self._indptr, other._indptr))
            and bool(np.array_equal(self._nbrs, other._nbrs))
        )

    __hash__ = None  # structural equality over large arrays; keep unhashable

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def complete_graph(m: int) -> Graph:
    """K_m on vertices 1..m, the seed of the attachment process."""
    if m < 1:
        raise ValueError("m must be at least 1")
    iu, iv = np.triu_indices(m, k=1)
    edges = np.column_stack([iu + 1, iv + 1]).astype(np.int32)
    return Graph(m, edges, m_hint=m, _trusted=True)


def attach_step(g: Graph, m: int, stream: Stream) -> Graph:
    """One growth step: add vertex n+1 joined to m distinct vertices of [n].

    Consumes the stream exactly as ``generate`` does, so starting from
    complete_graph(m) and applying attach_step n-m times with Stream(seed)
    reproduces generate(GenParams(n, m, seed)) edge for edge.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if g.n < m:
        raise ValueError("graph must already have at least m vertices")
    v = g.n + 1
    state, new_edges = kernels.attach_block(stream.state, v, v, m)
    stream.set_state(state)
    edges = np.concatenate([g.edge_array(), new_edges])
    return Graph(v, edges, m_hint=g.m_hint, _trusted=True)


def _generate_edges(params: GenParams) -> np.ndarray:
    iu, iv = np.triu_indices(params.m, k=1)
    base = np.column_stack([iu + 1, iv + 1]).astype(np.int32)
    if params.n == params.m:
        return base
    stream = Stream(params.seed)
    _, grown = kernels.attach_block(stream.state, params.m + 1, params.n, params.m)
    return np.concatenate([base, grown])


def generate(params: GenParams) -> Graph:
    """Sample the attachment graph with the given size, degree, and seed."""
    return Graph(params.n, _generate_edges(params), m_hint=params.m, _trusted=True)


def generate_prefixes(params: GenParams, checkpoints) -> list[Graph]:
    """Snapshots of one growth run at each checkpoint size.

    The checkpoints must be increasing sizes in [m, n]; the run is the same
    one generate(params) performs, so the last snapshot (if n is in the list)
    equals generate(params).
    """
    cps = list(checkpoints)
    if cps != sorted(set(cps)):
        raise ValueError("checkpoints must be strictly increasing")
    if cps and (cps[0] < params.m or cps[-1] > params.n):
        raise ValueError("checkpoints must lie in [m, n]")
    edges = _generate_edges(params)
    out = []
    base = params.m * (params.m - 1) // 2
    for k in cps:
        cnt = base + (k - params.m) * params.m
        out.append(Graph(k, edges[:cnt], m_hint=params.m, _trusted=True))
    return out


def distance(g: Graph, u: int, v: int):
    """Graph distance, or math.inf when u and v are disconnected."""
    g._check_vertex(u)
    g._check_vertex(v)
    d = kernels.set_distance(
        g._indptr, g._nbrs, np.array([u], np.int32), np.array([v], np.int32)
    )
    return math.inf if d < 0 else d


def set_distance(g: Graph, sources, targets):
    """min distance(s, t) over s in sources, t in targets; math.inf if none."""
    src = np.asarray(list(sources), dtype=np.int32)
    tgt = np.asarray(list(targets), dtype=np.int32)
    if len(src) == 0 or len(tgt) == 0:
        raise ValueError("sources and targets must be nonempty")
    for v in (int(src.min()), int(src.max()), int(tgt.min()), int(tgt.max())):
        g._check_vertex(v)
    d = kernels.set_distance(g._indptr, g._nbrs, src, tgt)
    return math.inf if d < 0 else d


def distances_from(g: Graph, sources, cap: int = -1) -> np.ndarray:
    """BFS distance from the source set to every vertex; -1 if unreached.

    With cap >= 0 the search stops at that radius (farther stays -1).
    """
    src = np.asarray(list(sources), dtype=np.int32)
    if len(src) == 0:
        raise ValueError("sources must be nonempty")
    g._check_vertex(int(src.min()))
    g._check_vertex(int(src.max()))
    return kernels.bfs_dists(g._indptr, g._nbrs, src, cap)


@dataclass(frozen=True)
class Ball:
    """Induced subgraph on a radius-r neighborhood, relabeled to 1..k.

    New labels follow (distance from center, original label), so the center
    is vertex 1. orig[i-1] and dist[i-1] are the original label and the
    distance of new vertex i.
    """

    graph: Graph
    center: int
    radius: int
    orig: tuple
    dist: tuple

    def to_original(self, v: int) -> int:
        return self.orig[v - 1]


def ball(g: Graph, center: int, radius: int) -> Ball:
    """The ball of the given radius around a vertex, as a relabeled graph."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    dists = distances_from(g, [center], cap=radius)
    verts = np.nonzero(dists >= 0)[0].astype(np.int32)
    order = np.lexsort((verts, dists[verts]))
    verts = verts[order]
    sub, _ = induced_subgraph(g, verts)
    return Ball(
        graph=sub,
        center=center,
        radius=radius,
        orig=tuple(int(v) for v in verts),
        dist=tuple(int(dists[v]) for v in verts),
    )


def induced_subgraph(g: Graph, verts) -> tuple[Graph, tuple]:
    """Induced subgraph relabeled 1..k in the order the vertices are given.

    Returns (subgraph, orig_labels).
    """
    vs = np.asarray(list(verts), dtype=np.int32)
    if len(vs) != len(set(vs.tolist())):
        raise ValueError("duplicate vertices")
    if len(vs):
        g._check_vertex(int(vs.min()))
        g._check_vertex(int(vs.max()))
    newid = np.zeros(g.n + 1, dtype=np.int32)
    newid[vs] = np.arange(1, len(vs) + 1, dtype=np.int32)
    chunks = [g._nbrs[g._indptr[v] : g._indptr[v + 1]] for v in vs]
    if chunks:
        dst = newid[np.concatenate(chunks)]
        src = np.repeat(newid[vs], [len(c) for c in chunks])
        keep = (dst > 0) & (src < dst)
        edges = np.column_stack([src[keep], dst[keep]])
    else:
        edges = np.empty((0, 2), np.int32)
    return Graph(len(vs), edges, _trusted=True), tuple(int(v) for v in vs)


def cycles_up_to(g: Graph, a: int, min_excl: int = 0) -> list[tuple]:
    """All simple cycles on at most ``a`` vertices, avoiding labels <= min_excl.

    Each cycle appears once as a canonical tuple: smallest vertex first, then
    the smaller of its two cycle neighbors. The list is sorted.
    """
    if a < 0:
        raise ValueError("a must be nonnegative")
    lengths, flat = kernels.cycles_upto(g._indptr, g._nbrs, a, min_excl)
    out = []
    pos = 0
    for ln in lengths:
        out.append(tuple(int(v) for v in flat[pos : pos + ln]))
        pos += ln
    out.sort()
    return out


def write_graph(g: Graph, file) -> None:
    """Write as text: a header line "n m_hint", then one "u v" line per edge
    (u < v, lexicographic order)."""
    if isinstance(file, (str, bytes)) or hasattr(file, "__fspath__"):
        with open(file, "w") as f:
            write_graph(g, f)
        return
    file.write(f"{g.n} {g.m_hint}\n")
    for u, v in g.edges():
        file.write(f"{u} {v}\n")


def read_graph(file) -> Graph:
    """Read the format written by write_graph."""
    if isinstance(file, (str, bytes)) or hasattr(file, "__fspath__"):
        with open(file) as f:
            return read_graph(f)
    header = file.readline().split()
    if len(header) != 2:
        raise ValueError("header must be two integers: n m_hint")
    n, m_hint = int(header[0]), int(header[1])
    edges = []
    for line in file:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise ValueError(f"bad edge line: {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, edges, m_hint=m_hint)


def graph_from_text(text: str) -> Graph:
    """read_graph from a string, mostly for tests and small examples."""
    return read_graph(io.StringIO(text))
