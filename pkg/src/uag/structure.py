"""Structural property checkers for attachment graphs.

The three properties gate the duplicator strategy: Q1 keeps short cycles and
short core-to-core paths under control near the core [n0], Q2 asks for many
short cycles far outside the extended core [N0], and Q3 asks that every
extended-core vertex has large degree. Trajectory helpers track the maximum
degree and short-cycle counts of one evolving instance, and a scan mode
measures empirical pass rates over a grid of core sizes.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass

from . import canonical
from .graphs import (
    GenParams,
    Graph,
    ball,
    cycles_up_to,
    distances_from,
    generate,
    generate_prefixes,
)


@dataclass(frozen=True)
class StructureParams:
    a: int
    n0: int
    N0: int
    K: int

    def __post_init__(self):
        if self.a < 3:
            raise ValueError("locality radius a must be at least 3")
        if not 1 <= self.n0 <= self.N0:
            raise ValueError("need 1 <= n0 <= N0")
        if self.K < 1:
            raise ValueError("threshold K must be positive")


@dataclass(frozen=True)
class Q1Report:
    """Clause (i): short cycles near [n0] confined, with clean connectors.
    Clause (ii): short core-to-core paths stay inside [N0].
    Clause (iii): short cycles avoiding [n0] are pairwise far apart."""

    ok: bool
    confinement_violations: tuple  # (cycle, escaping path or None)
    path_violations: tuple  # paths between [n0] vertices leaving [N0]
    proximity_violations: tuple  # (cycle, cycle, distance)


@dataclass(frozen=True)
class Q2Report:
    ok: bool
    threshold: int
    counts: dict  # cycle length -> count outside [N0]

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(self.counts))


@dataclass(frozen=True)
class Q3Report:
    """ok/offenders use the plain threshold K; the strict form uses the
    degree floor N0 + m demanded of extended-core vertices."""

    ok: bool
    threshold: int
    offenders: tuple
    strict_ok: bool
    strict_threshold: int
    strict_offenders: tuple
    min_degree: int


@dataclass(frozen=True)
class StructureReport:
    q1: Q1Report
    q2: Q2Report
    q3: Q3Report

    @property
    def ok(self) -> bool:
        return self.q1.ok and self.q2.ok and self.q3.ok


def _escape_bounds(g: Graph, n0: int, N0: int):
    """Walk-distance lower bounds used to prune the simple-path search.

    to_core[v]: length of a shortest walk from v to [n0].
    via_outside[v]: length of a shortest walk from v to [n0] whose vertices
    include at least one vertex > N0 (possibly v itself); -1 if none exists.
    """
    to_core = distances_from(g, range(1, n0 + 1))
    via_outside = [-1] * (g.n + 1)
    seen_clean = [False] * (g.n + 1)
    queue = collections.deque()
    for u in range(1, n0 + 1):
        seen_clean[u] = True
        queue.append((u, 0, 0))
    while queue:
        v, flag, d = queue.popleft()
        for w in g.neighbors(v):
            w = int(w)
            nflag = flag or w > N0
            if nflag:
                if via_outside[w] < 0:
                    via_outside[w] = d + 1
                    queue.append((w, 1, d + 1))
            elif not seen_clean[w]:
                seen_clean[w] = True
                queue.append((w, 0, d + 1))
    return to_core, via_outside


def _simple_paths_escape(
    g: Graph, start: int, targets, N0: int, max_edges: int, to_core, via_outside
):
    """A simple path from start (<= max_edges edges) to a vertex satisfying
    `targets` that visits some vertex > N0; None when no such path exists.

    Enumerates simple paths (the property is literally about them), pruned
    by the walk-distance bounds: a branch is dropped as soon as even a walk
    could not reach [n0] through an outside vertex within the budget.
    """

    def viable(v: int, depth: int, outside: bool) -> bool:
        if outside:
            return 0 <= to_core[v] <= max_edges - depth
        return 0 <= via_outside[v] <= max_edges - depth

    path = [start]
    on_path = {start}

    def descend(v: int, depth: int, outside: bool):
        for w in g.neighbors(v):
            w = int(w)
            if w in on_path:
                continue
            w_outside = outside or w > N0
            if targets(w) and w_outside:
                path.append(w)
                return True
            if depth + 1 < max_edges and viable(w, depth + 1, w_outside):
                path.append(w)
                on_path.add(w)
                if descend(w, depth + 1, w_outside):
                    return True
                path.pop()
                on_path.remove(w)
        return False

    if max_edges >= 1 and viable(start, 0, start > N0) and descend(
        start, 0, start > N0
    ):
        return tuple(path)
    return None


def check_q1(g: Graph, p: StructureParams) -> Q1Report:
    if p.N0 > g.n:
        raise ValueError("N0 exceeds the number of vertices")
    a, n0, N0 = p.a, p.n0, p.N0
    core = list(range(1, n0 + 1))
    cycles = cycles_up_to(g, a)
    to_core, via_outside = _escape_bounds(g, n0, N0)

    confinement = []
    for cyc in cycles:
        dist = min(int(to_core[z]) for z in cyc)
        if dist < 0 or dist >= a:
            continue
        if any(v > N0 for v in cyc):
            confinement.append((cyc, None))
            continue
        # every simple path of <= a edges from the cycle into [n0] must
        # stay inside [N0]
        for z in cyc:
            esc = _simple_paths_escape(
                g, z, lambda w: w <= n0, N0, a, to_core, via_outside
            )
            if esc is not None:
                confinement.append((cyc, esc))
                break

    paths = []
    for u in core:
        esc = _simple_paths_escape(
            g, u, lambda w: w <= n0 and w != u, N0, a - 1, to_core, via_outside
        )
        if esc is not None:
            paths.append(esc)

    outside = [cyc for cyc in cycles if all(v > n0 for v in cyc)]
    proximity = _cycle_proximity(g, outside, a)

    return Q1Report(
        ok=not (confinement or paths or proximity),
        confinement_violations=tuple(confinement),
        path_violations=tuple(paths),
        proximity_violations=tuple(proximity),
    )


def _cycle_proximity(g: Graph, cycles, a: int) -> tuple:
    """Pairs of distinct cycles at distance < a, found by one multi-source
    BFS: each vertex is claimed by its nearest cycle, and an edge whose ends
    belong to different cycles witnesses a pair at distance at most
    dist(u) + dist(v) + 1. The reported value is that bound (the true
    distance is at most it); the scan provably finds some pair whenever any
    two cycles are closer than a, so ok-ness is exact. Cycles sharing a
    vertex are reported at distance 0.
    """
    pairs = {}
    claim = {}
    for i, cyc in enumerate(cycles):
        for z in cyc:
            if z in claim:
                key = (claim[z], i)
                if key[0] != key[1]:
                    pairs[key] = 0
            else:
                claim[z] = i
    dist = {z: 0 for z in claim}
    queue = collections.deque(sorted(claim))
    while queue:
        v = queue.popleft()
        dv = dist[v]
        for w in g.neighbors(v):
            w = int(w)
            if w not in dist:
                if dv < a - 1:
                    dist[w] = dv + 1
                    claim[w] = claim[v]
                    queue.append(w)
            elif claim[w] != claim[v]:
                bound = dv + dist[w] + 1
                if bound < a:
                    key = (min(claim[v], claim[w]), max(claim[v], claim[w]))
                    if bound < pairs.get(key, a):
                        pairs[key] = bound
    return tuple(
        (cycles[i], cycles[j], d) for (i, j), d in sorted(pairs.items())
    )


def check_q2(g: Graph, p: StructureParams) -> Q2Report:
    counts = {b: 0 for b in range(3, p.a + 1)}
    for cyc in cycles_up_to(g, p.a, min_excl=p.N0):
        counts[len(cyc)] += 1
    ok = all(c >= p.K for c in counts.values())
    return Q2Report(ok=ok, threshold=p.K, counts=counts)


def check_q3(g: Graph, p: StructureParams) -> Q3Report:
    if p.N0 > g.n:
        raise ValueError("N0 exceeds the number of vertices")
    degs = g.degrees()
    core_degs = [(int(degs[v]), v) for v in range(1, p.N0 + 1)]
    strict = p.N0 + g.m_hint
    offenders = tuple(v for d, v in core_degs if d < p.K)
    strict_offenders = tuple(v for d, v in core_degs if d < strict)
    return Q3Report(
        ok=not offenders,
        threshold=p.K,
        offenders=offenders,
        strict_ok=not strict_offenders,
        strict_threshold=strict,
        strict_offenders=strict_offenders,
        min_degree=min(d for d, _ in core_degs),
    )


def structure_report(g: Graph, p: StructureParams) -> StructureReport:
    return StructureReport(check_q1(g, p), check_q2(g, p), check_q3(g, p))


# ---------------------------------------------------------------------------
# trajectories along one evolving instance


@dataclass(frozen=True)
class DegreeStats:
    checkpoints: tuple
    max_degree: tuple
    ratio: tuple  # max degree / (ln n)^2


@dataclass(frozen=True)
class CycleStats:
    checkpoints: tuple
    counts: dict  # cycle length -> per-checkpoint counts

    def __post_init__(self):
        object.__setattr__(
            self, "counts", {k: tuple(v) for k, v in self.counts.items()}
        )


def degree_trajectory(params: GenParams, checkpoints) -> DegreeStats:
    """Maximum degree of one instance observed at each checkpoint."""
    snaps = generate_prefixes(params, checkpoints)
    checkpoints = tuple(int(c) for c in checkpoints)
    maxima = tuple(int(s.degrees()[1:].max()) for s in snaps)
    ratio = tuple(
        d / (math.log(n) ** 2) if n > 1 else math.inf
        for d, n in zip(maxima, checkpoints)
    )
    return DegreeStats(checkpoints=checkpoints, max_degree=maxima, ratio=ratio)


def cycle_trajectory(params: GenParams, a: int, checkpoints) -> CycleStats:
    """Counts of cycles of each length 3..a at each checkpoint."""
    if a < 3:
        raise ValueError("cycle lengths start at 3")
    snaps = generate_prefixes(params, checkpoints)
    counts = {k: [] for k in range(3, a + 1)}
    for s in snaps:
        seen = {k: 0 for k in range(3, a + 1)}
        for cyc in cycles_up_to(s, a):
            seen[len(cyc)] += 1
        for k in counts:
            counts[k].append(seen[k])
    return CycleStats(
        checkpoints=tuple(int(c) for c in checkpoints), counts=counts
    )


# ---------------------------------------------------------------------------
# neighborhood classification


def neighborhood_classification(
    g: Graph, v: int, radius: int, a: int, core: int = 0
) -> str:
    """Classify the radius-ball around v by cycle rank and triviality.

    Returns "core-adjacent" when the ball touches [core] (never with the
    default core=0), "tree-trivial"/"tree" for acyclic balls, the analogous
    "unicyclic-trivial"/"unicyclic" for balls with exactly one cycle, and
    "complex" for two or more independent cycles.
    """
    b = ball(g, v, radius)
    if core and any(o <= core for o in b.orig):
        return "core-adjacent"
    sub = b.graph
    extra = sub.num_edges - (sub.n - 1)
    if extra == 0:
        t = canonical.tree_from_graph(sub, root=1)
        return "tree-trivial" if canonical.a_trivial(t, a) else "tree"
    if extra == 1:
        c = canonical.RootedUnicyclic(sub, root=1)
        if canonical.unicyclic_a_trivial(c, a):
            return "unicyclic-trivial"
        return "unicyclic"
    return "complex"


# ---------------------------------------------------------------------------
# core-size scan


@dataclass(frozen=True)
class ScanRow:
    n0: int
    N0: int
    seeds: int
    q1_rate: float
    q2_rate: float
    q3_rate: float
    joint_rate: float


def scan_core_sizes(
    n: int, m: int, a: int, K: int, n0_values, N0_values, seeds
) -> list:
    """Empirical Q1/Q2/Q3 pass rates over a grid of core sizes.

    One graph is generated per seed and reused for every grid point, so the
    rates across the grid are measured on identical instances.
    """
    pairs = [
        (n0, N0)
        for n0 in sorted(set(n0_values))
        for N0 in sorted(set(N0_values))
        if 1 <= n0 <= N0 <= n
    ]
    if not pairs:
        raise ValueError("no valid (n0, N0) pairs in the grid")
    seeds = list(seeds)
    hits = {pair: [0, 0, 0, 0] for pair in pairs}
    for seed in seeds:
        g = generate(GenParams(n=n, m=m, seed=seed))
        for pair in pairs:
            p = StructureParams(a=a, n0=pair[0], N0=pair[1], K=K)
            rep = structure_report(g, p)
            hits[pair][0] += rep.q1.ok
            hits[pair][1] += rep.q2.ok
            hits[pair][2] += rep.q3.ok
            hits[pair][3] += rep.ok
    total = len(seeds)
    return [
        ScanRow(
            n0=n0,
            N0=N0,
            seeds=total,
            q1_rate=hits[(n0, N0)][0] / total,
            q2_rate=hits[(n0, N0)][1] / total,
            q3_rate=hits[(n0, N0)][2] / total,
            joint_rate=hits[(n0, N0)][3] / total,
        )
        for n0, N0 in pairs
    ]
