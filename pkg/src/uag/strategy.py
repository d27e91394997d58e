"""Explicit vertex-matching strategy on locally tree-like graph pairs.

A match runs on a pair of graphs H1, H2 that agree on a small labeled core
[1..N0] and satisfy the locality (Q1), cycle-supply (Q2), and core-degree
(Q3) conditions of the structure module. One player (the opponent) pebbles a
vertex in either graph each round; this module computes the reply in the
other graph so that the pebbled pairs always induce a partial isomorphism.

The reply logic classifies every pebbled pair into one of three properties,
indexed by the round it was placed in (the radius attached to a pebble
halves each round):

  tag 1  both pebbles on the same core vertex, close to the seed set
         [1..n0] inside the core;
  tag 2  both pebbles far from the seed set, with matching trivially
         trimmed tree or unicyclic neighborhoods;
  tag 3  neighborhoods that meet the core: a core anchor u, a core region
         around u, and mirrored trees hanging off the core.

``respond`` constructs replies case by case and verifies the new pebble's
distance pattern before committing. ``self_check`` re-derives every recorded
property from scratch and reports violations, so a run with an empty
self_check each round is machine-checked evidence that the strategy kept its
invariants. Randomized and exhaustive opponents are provided as drivers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .canonical import (
    RootedTree,
    RootedUnicyclic,
    canon_code,
    perfect_code,
    unicyclic_code,
)
from .graphs import (
    Graph,
    cycles_up_to,
    distances_from,
    graph_from_text,
    induced_subgraph,
    write_graph,
)
from .rng import Stream
from .structure import StructureParams, check_q2, check_q3, structure_report

INF = 10**9


class ExhaustionError(RuntimeError):
    """No valid reply exists; on a validated context this signals that one
    of the hypotheses Q1-Q3 fails after all (or an internal defect)."""


class UnvalidatedContext(RuntimeError):
    """Strategy operation invoked before validate_context passed."""


def rho(R: int, rd: int) -> int:
    """Radius attached to a pebble placed in round rd of an R-round match."""
    if not 1 <= rd <= R:
        raise ValueError("round out of range")
    return 2 ** (R + 1 - rd)


def clean_scale(R: int) -> int:
    """Largest cycle length that fits inside a round-1 radius ball: a cycle
    on at most 2*2^R + 1 vertices can lie inside some radius-2^R ball, so
    censuses must run out to this length."""
    return 2 ** (R + 1) + 1


def separation_scale(R: int) -> int:
    """Required pairwise distance between short cycles: the larger of the
    locality radius 3^R and the ball-disjointness bound 2*2^R + 1."""
    return max(3**R, 2 ** (R + 1) + 1)


def core_scale(R: int) -> int:
    """Required distance from short cycles to the seed set [1..n0]."""
    return max(3**R, 2 ** (R + 1) + 2)


# ---------------------------------------------------------------------------
# match context


@dataclass
class MatchContext:
    """A pair of graphs sharing the labeled core [1..N0], plus parameters.

    Caches (seed distance arrays, the short-cycle registry, in-core
    distances) fill lazily; validate_context must pass before any strategy
    operation will run.
    """

    h1: Graph
    h2: Graph
    m: int
    R: int
    n0: int = 1
    N0: int = 2
    label: str = ""
    report: "ValidationReport" = None
    _core_dist: tuple = field(default=None, repr=False)
    _cycles: tuple = field(default=None, repr=False)
    _core_pairs: dict = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("need m >= 3 (the match has m - 2 pebble pairs)")
        if self.R < 1:
            raise ValueError("need at least one round")
        if not 1 <= self.n0 <= self.N0:
            raise ValueError("need 1 <= n0 <= N0")
        if self.N0 > min(self.h1.n, self.h2.n):
            raise ValueError("core exceeds a graph")

    @property
    def pebbles(self) -> int:
        return self.m - 2

    def graph(self, side: int) -> Graph:
        if side == 1:
            return self.h1
        if side == 2:
            return self.h2
        raise ValueError("side must be 1 or 2")

    def core_dist(self, side: int) -> np.ndarray:
        """Distance from every vertex to the seed set [1..n0]."""
        if self._core_dist is None:
            seeds = range(1, self.n0 + 1)
            self._core_dist = (
                distances_from(self.h1, seeds),
                distances_from(self.h2, seeds),
            )
        return self._core_dist[side - 1]

    def cycles(self, side: int) -> dict:
        """Short cycles by length as canonical vertex tuples."""
        if self._cycles is None:
            s = clean_scale(self.R)
            self._cycles = (
                _group_by_length(cycles_up_to(self.h1, s)),
                _group_by_length(cycles_up_to(self.h2, s)),
            )
        return self._cycles[side - 1]

    def core_pair_dist(self, v: int, w: int) -> int:
        """Distance inside the induced core H|[1..N0] (INF if disconnected
        there). Both graphs agree on the core, so one table serves both."""
        if self._core_pairs is None:
            sub, _ = induced_subgraph(self.h1, range(1, self.N0 + 1))
            table = {}
            for s in range(1, self.N0 + 1):
                d = distances_from(sub, [s])
                for t in range(1, self.N0 + 1):
                    table[(s, t)] = int(d[t]) if d[t] >= 0 else INF
            self._core_pairs = table
        return self._core_pairs[(v, w)]

    def core_set_dist(self, v: int) -> int:
        """Distance from a core vertex to the seed set inside the core."""
        return min(self.core_pair_dist(v, w) for w in range(1, self.n0 + 1))

    def validated(self) -> bool:
        return self.report is not None and self.report.ok


def _group_by_length(cycles) -> dict:
    out = {}
    for cyc in cycles:
        out.setdefault(len(cyc), []).append(tuple(cyc))
    for lst in out.values():
        lst.sort()
    return out


# ---------------------------------------------------------------------------
# context validation


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of every hypothesis check, in order, with diagnostics."""

    ok: bool
    checks: tuple  # (name, passed, detail)
    literal_q2_ok: bool
    scales: tuple  # (clean, separation, core)

    def failures(self) -> list:
        return [c for c in self.checks if not c[1]]

    def __str__(self):
        lines = []
        for name, passed, detail in self.checks:
            mark = "ok" if passed else "FAIL"
            lines.append(f"{name}: {mark}" + (f" ({detail})" if detail else ""))
        return "\n".join(lines)


def validate_context(ctx: MatchContext, deep: bool = False) -> ValidationReport:
    """Check every hypothesis the strategy relies on; cache what it needs.

    Cycle censuses run at the clean scale 2^{R+1}+1 (which covers the
    locality radius 3^R for R <= 2); separation and seed-distance
    thresholds take the maximum of both scales. Cycle supply is checked
    demand-driven: every length occurring outside the core in either graph
    must come in at least m well-separated, profile-uniform copies on both
    sides. The literal all-lengths-up-to-3^R supply is recorded as
    literal_q2_ok but does not gate, since lengths absent from both graphs
    are never requested in a match. deep=True additionally runs the
    structure module's full reports and cross-checks them.
    """
    checks = []
    m, R, n0, N0 = ctx.m, ctx.R, ctx.n0, ctx.N0
    s_clean = clean_scale(R)
    s_sep = separation_scale(R)
    s_core = core_scale(R)
    if 3**R > s_clean:
        checks.append(
            (
                "scales",
                False,
                f"locality radius 3^{R}={3 ** R} exceeds the census scale "
                f"{s_clean}; cycle analysis at this R is out of reach",
            )
        )
        return _finish_report(ctx, checks, False, (s_clean, s_sep, s_core))

    degs1 = ctx.h1.degrees()[1:]
    degs2 = ctx.h2.degrees()[1:]
    mindeg = int(min(degs1.min(), degs2.min()))
    checks.append(("min_degree", mindeg >= m, f"min degree {mindeg}, need >= {m}"))

    core1, _ = induced_subgraph(ctx.h1, range(1, N0 + 1))
    core2, _ = induced_subgraph(ctx.h2, range(1, N0 + 1))
    checks.append(("core_equal", core1 == core2, f"induced [1..{N0}] subgraphs"))

    q3a = check_q3(ctx.h1, StructureParams(a=3, n0=n0, N0=N0, K=N0 + m))
    q3b = check_q3(ctx.h2, StructureParams(a=3, n0=n0, N0=N0, K=N0 + m))
    checks.append(
        (
            "q3_core_degree",
            q3a.ok and q3b.ok,
            f"core degrees >= {N0 + m}; offenders {q3a.offenders + q3b.offenders}",
        )
    )

    conn = all(bool((ctx.core_dist(s)[1:] >= 0).all()) for s in (1, 2))
    checks.append(("connected", conn, "every vertex reaches the seed set"))
    if not conn:
        return _finish_report(ctx, checks, False, (s_clean, s_sep, s_core))

    cyc1 = ctx.cycles(1)
    cyc2 = ctx.cycles(2)
    n_short = sum(len(v) for v in cyc1.values()) + sum(len(v) for v in cyc2.values())
    if n_short > 4000:
        checks.append(("census", False, f"{n_short} short cycles, refusing analysis"))
        return _finish_report(ctx, checks, False, (s_clean, s_sep, s_core))
    checks.append(("census", True, f"{n_short} cycles of length <= {s_clean} total"))

    # each short cycle sits entirely inside the core with clean approaches,
    # or entirely outside, far from the seed set
    confine_ok, confine_detail = True, []
    for side in (1, 2):
        cd = ctx.core_dist(side)
        for lst in ctx.cycles(side).values():
            for cyc in lst:
                if all(v <= N0 for v in cyc):
                    bad = _approach_escape(ctx, side, cyc, 3**R)
                    if bad is not None:
                        confine_ok = False
                        if len(confine_detail) < 4:
                            confine_detail.append(f"H{side} {cyc} approach via {bad}")
                else:
                    d = min(int(cd[v]) for v in cyc)
                    if any(v <= N0 for v in cyc) or d < s_core:
                        confine_ok = False
                        if len(confine_detail) < 4:
                            confine_detail.append(f"H{side} {cyc} at seed distance {d}")
    checks.append(("cycle_confinement", confine_ok, "; ".join(confine_detail)))

    # pairwise separation between short cycles away from the seed set
    sep_ok, sep_detail = True, ""
    for side in (1, 2):
        g = ctx.graph(side)
        outside = [
            cyc
            for lst in ctx.cycles(side).values()
            for cyc in lst
            if all(v > n0 for v in cyc)
        ]
        for i, cyc in enumerate(outside):
            if not sep_ok:
                break
            d = _dists_capped(g, cyc, s_sep)
            for other in outside[i + 1 :]:
                gap = min(d.get(v, INF) for v in other)
                if gap < s_sep:
                    sep_ok = False
                    sep_detail = f"H{side}: {cyc} and {other} at distance {gap}"
                    break
    checks.append(("cycle_separation", sep_ok, sep_detail))

    # demand-driven supply: lengths present outside the core must agree
    # across sides and come in at least m copies each
    len1 = {b for b, lst in cyc1.items() if any(all(v > N0 for v in c) for c in lst)}
    len2 = {b for b, lst in cyc2.items() if any(all(v > N0 for v in c) for c in lst)}
    supply_ok = len1 == len2
    detail = f"lengths H1 {sorted(len1)} H2 {sorted(len2)}"
    counts = {}
    for b in sorted(len1 | len2):
        c1 = sum(1 for c in cyc1.get(b, ()) if all(v > N0 for v in c))
        c2 = sum(1 for c in cyc2.get(b, ()) if all(v > N0 for v in c))
        counts[b] = (c1, c2)
        if c1 < m or c2 < m:
            supply_ok = False
    if counts:
        detail += f", copies {counts}, need >= {m}"
    checks.append(("cycle_supply", supply_ok, detail))

    # each supply cycle's neighborhood is unicyclic out to the round-1
    # radius, and per length every copy carries the same trimmed profile
    prof_ok, prof_detail = True, ""
    r1 = rho(R, 1)
    for b in sorted(len1 | len2):
        codes = set()
        for side in (1, 2):
            for cyc in ctx.cycles(side).get(b, ()):
                if not all(v > N0 for v in cyc):
                    continue
                code = _pod_profile(ctx, side, cyc, r1)
                if code is None:
                    prof_ok = False
                    prof_detail = f"H{side} {cyc}: neighborhood not unicyclic"
                else:
                    codes.add(code)
        if len(codes) > 1:
            prof_ok = False
            prof_detail = prof_detail or f"length {b}: {len(codes)} distinct profiles"
    checks.append(("cycle_profiles", prof_ok, prof_detail))

    # seed-pair approach paths (vacuous for n0 = 1): no short detour
    # through the outside between two seed vertices
    pair_ok, pair_detail = True, ""
    if n0 > 1:
        for side in (1, 2):
            g = ctx.graph(side)
            for u in range(1, n0 + 1):
                du = _dists_capped(g, [u], 3**R)
                for w in range(u + 1, n0 + 1):
                    dw = _dists_capped(g, [w], 3**R)
                    for z in set(du) & set(dw):
                        if z > N0 and du[z] + dw[z] <= 3**R - 1:
                            pair_ok = False
                            pair_detail = f"H{side}: seed detour via {z}"
    checks.append(("seed_paths", pair_ok, pair_detail))

    literal_q2 = True
    for side in (1, 2):
        rep = check_q2(ctx.graph(side), StructureParams(a=3**R, n0=n0, N0=N0, K=m))
        literal_q2 = literal_q2 and rep.ok

    if deep:
        agree = True
        for side in (1, 2):
            rep = structure_report(
                ctx.graph(side), StructureParams(a=3**R, n0=n0, N0=N0, K=m)
            )
            if not rep.q1.ok or not rep.q3.strict_ok:
                agree = False
        checks.append(("deep_structure", agree, "full structure-module reports"))

    return _finish_report(ctx, checks, literal_q2, (s_clean, s_sep, s_core))


def _finish_report(ctx, checks, literal_q2, scales):
    ok = all(passed for _, passed, _ in checks)
    report = ValidationReport(ok, tuple(checks), literal_q2, scales)
    ctx.report = report
    return report


def _approach_escape(ctx, side, cyc, radius):
    """A vertex outside the core that could lie on a short path from the
    seed set to the given in-core cycle (conservative witness search)."""
    g = ctx.graph(side)
    d_seed = _dists_capped(g, range(1, ctx.n0 + 1), radius)
    d_cyc = _dists_capped(g, cyc, radius)
    for z in sorted(d_seed):
        if z > ctx.N0 and z in d_cyc and d_seed[z] + d_cyc[z] <= radius:
            return z
    return None


def _pod_profile(ctx, side, cyc, radius):
    """Rotation/reflection-canonical tuple of full hanging-tree codes
    around a short cycle, or None when its neighborhood is not unicyclic.
    Full codes, because replies near supply cycles need entry points whose
    rooted neighborhoods match exactly, branch counts included."""
    g = ctx.graph(side)
    d = _dists_capped(g, cyc, radius)
    edges = 0
    for v in d:
        for w in _nbrs(g, v):
            if w in d and w > v:
                edges += 1
    if edges != len(d):  # exactly one independent cycle in the neighborhood
        return None
    cset = set(cyc)
    codes = [_hang_code(g, c, cset - {c}, radius, None) for c in cyc]
    best = None
    k = len(codes)
    for seq in (codes, codes[::-1]):
        for s in range(k):
            cand = tuple(seq[(s + i) % k] for i in range(k))
            if best is None or cand < best:
                best = cand
    return best


# ---------------------------------------------------------------------------
# bounded graph exploration helpers (deterministic order throughout)


def _nbrs(g: Graph, v: int) -> list:
    return [int(w) for w in g.neighbors(v)]


def _dists_capped(g: Graph, sources, cap: int) -> dict:
    """BFS distances from a vertex set, out to the cap inclusive."""
    dist = {}
    frontier = []
    for s in sources:
        s = int(s)
        if s not in dist:
            dist[s] = 0
            frontier.append(s)
    d = 0
    while frontier and d < cap:
        nxt = []
        for v in frontier:
            for w in _nbrs(g, v):
                if w not in dist:
                    dist[w] = d + 1
                    nxt.append(w)
        frontier = nxt
        d += 1
    return dist


def _capped_dist(g: Graph, a: int, b: int, cap: int) -> int:
    """Distance between two vertices if at most cap, else INF."""
    if a == b:
        return 0
    return _dists_capped(g, [a], cap).get(b, INF)


@dataclass
class _BallInfo:
    """BFS exploration of a ball: lexicographic tree plus the extra edges."""

    center: int
    radius: int
    dist: dict
    parent: dict
    order: list
    nontree: list  # (x, w), x < w, both inside, neither parenting the other


def _ball_info(g: Graph, center: int, radius: int) -> _BallInfo:
    dist = {center: 0}
    parent = {center: 0}
    order = [center]
    frontier = [center]
    d = 0
    while frontier and d < radius:
        nxt = []
        for v in frontier:
            for w in _nbrs(g, v):
                if w not in dist:
                    dist[w] = d + 1
                    parent[w] = v
                    order.append(w)
                    nxt.append(w)
        frontier = nxt
        d += 1
    nontree = []
    for v in order:
        for w in _nbrs(g, v):
            if w > v and w in dist and parent.get(w) != v and parent.get(v) != w:
                nontree.append((v, w))
    return _BallInfo(center, radius, dist, parent, order, nontree)


def _ball_cycle(info: _BallInfo):
    """(rank, cycle) of the ball subgraph: rank counts independent cycles;
    the cycle vertex tuple is extracted for rank one (None otherwise)."""
    rank = len(info.nontree)
    if rank != 1:
        return rank, None
    x, w = info.nontree[0]
    cx, cw = [x], [w]
    a, b = x, w
    while info.dist[a] > info.dist[b]:
        a = info.parent[a]
        cx.append(a)
    while info.dist[b] > info.dist[a]:
        b = info.parent[b]
        cw.append(b)
    while a != b:
        a = info.parent[a]
        b = info.parent[b]
        cx.append(a)
        cw.append(b)
    cycle = cx[:-1] + cw[::-1]
    return 1, tuple(cycle)


def _subtree(g: Graph, root: int, avoid, depth: int):
    """Truncated BFS subtree below root avoiding a vertex set, returned as
    a RootedTree plus the graph vertex for each tree label."""
    avoid = set(avoid)
    label = {root: 1}
    back = [root]
    parent = [0]
    frontier = [root]
    d = 0
    while frontier and d < depth:
        nxt = []
        for v in frontier:
            for w in _nbrs(g, v):
                if w not in label and w not in avoid:
                    label[w] = len(back) + 1
                    back.append(w)
                    parent.append(label[v])
                    nxt.append(w)
        frontier = nxt
        d += 1
    return RootedTree(parent), back


def _hang_code(g: Graph, v: int, avoid, depth: int, arity: int) -> bytes:
    """Trimmed canonical code of the truncated subtree hanging at v."""
    t, _ = _subtree(g, v, avoid, depth)
    return canon_code(t, arity)


# ---------------------------------------------------------------------------
# pebble records and state


@dataclass(frozen=True)
class PebbleRecord:
    """One pebble pair (x in H1, y in H2) and its recorded property.

    fmap is the stored partial-isomorphism skeleton, a sorted tuple of
    (H1 vertex, H2 vertex) pairs. It contains (x, y), the identity on the
    recorded core region, the mirrored paths and cycles used to build the
    reply, and the pairs inherited from the host pebble when the reply was
    mirrored through an earlier neighborhood.
    """

    x: int
    y: int
    rd: int
    tag: int  # 1 shared core, 2 detached neighborhood, 3 anchored
    kind: str = ""  # tag 2: "tree" or "uni"
    cyc_len: int = 0
    cyc_dist: int = 0
    cycle1: tuple = ()
    cycle2: tuple = ()
    u: int = 0
    d0: int = 0
    core: frozenset = frozenset()
    first1: int = 0
    first2: int = 0
    fmap: tuple = ()

    def side_vertex(self, side: int) -> int:
        return self.x if side == 1 else self.y

    def forward(self) -> dict:
        return dict(self.fmap)

    def backward(self) -> dict:
        return {b: a for a, b in self.fmap}


@dataclass
class StrategyState:
    """Pebble records after a number of completed rounds."""

    round: int = 0
    records: dict = field(default_factory=dict)

    def copy(self) -> "StrategyState":
        return StrategyState(self.round, dict(self.records))

    def placed(self) -> list:
        return sorted(self.records)


def empty_state(ctx: MatchContext) -> StrategyState:
    return StrategyState()


def _require_valid(ctx: MatchContext):
    if not ctx.validated():
        raise UnvalidatedContext(
            "run validate_context first; the strategy refuses unvalidated pairs"
        )


def _merge_fmap(*parts) -> dict:
    """Union of partial maps; any disagreement or injectivity break is a
    construction defect surfaced as ExhaustionError."""
    out = {}
    inv = {}
    for part in parts:
        items = part.items() if isinstance(part, dict) else part
        for a, b in items:
            if out.get(a, b) != b or inv.get(b, a) != a:
                raise ExhaustionError(f"inconsistent skeleton near {a}<->{b}")
            out[a] = b
            inv[b] = a
    return out


# ---------------------------------------------------------------------------
# reply construction


def first_move(ctx: MatchContext, vertex: int, graph_side: int) -> int:
    """Reply to the opening pebble; wrapper over respond."""
    y, _ = respond(ctx, empty_state(ctx), 1, 1, vertex, graph_side)
    return y


def respond(ctx, state, rnd, pebble, vertex, side):
    """Reply to the opponent pebbling `vertex` in graph `side` in round rnd.

    Returns (reply vertex in the other graph, new state). Raises
    ExhaustionError when no reply satisfying the recorded properties can be
    built, which on a validated context indicates a hypothesis violation.
    """
    _require_valid(ctx)
    if rnd != state.round + 1:
        raise ValueError(f"round {rnd} out of order (played {state.round})")
    if rnd > ctx.R:
        raise ValueError("match is over")
    if not 1 <= pebble <= ctx.pebbles:
        raise ValueError("pebble index out of range")
    if side not in (1, 2):
        raise ValueError("side must be 1 or 2")
    ctx.graph(side)._check_vertex(vertex)

    others = {i: rec for i, rec in state.records.items() if i != pebble}
    # a vertex already pebbled on the same side forces the partner reply;
    # the record is cloned, keeping the round it was first established in
    clone = None
    for i in sorted(others):
        if others[i].side_vertex(side) == vertex:
            clone = others[i]
            break
    if clone is None and pebble in state.records:
        old = state.records[pebble]
        if old.side_vertex(side) == vertex:
            clone = old
    if clone is not None:
        new = state.copy()
        new.round = rnd
        new.records[pebble] = clone
        return clone.side_vertex(3 - side), new

    record = _construct(ctx, others, rnd, vertex, side)
    _verify_reply(ctx, others, rnd, record)
    new = state.copy()
    new.round = rnd
    new.records[pebble] = record
    return record.side_vertex(3 - side), new


def _construct(ctx, others, rnd, x, side) -> PebbleRecord:
    """Case dispatch for a fresh vertex x pebbled on `side` in round rnd."""
    r_new = rho(ctx.R, rnd)

    if x <= ctx.N0 and ctx.core_set_dist(x) <= r_new:
        return PebbleRecord(x=x, y=x, rd=rnd, tag=1, fmap=((x, x),))

    g_s = ctx.graph(side)
    J = {}
    for i, rec in others.items():
        d = _capped_dist(g_s, rec.side_vertex(side), x, r_new)
        if d <= r_new:
            J[i] = d

    if int(ctx.core_dist(side)[x]) <= r_new:
        if any(others[i].tag == 2 for i in J):
            # a detached neighborhood reaching into a near-seed radius
            # contradicts its recorded seed distance
            raise ExhaustionError("detached pebble inside a near-seed radius")
        j3 = [i for i in J if others[i].tag == 3]
        if j3:
            return _anchored_mirror(ctx, others, rnd, x, side, j3)
        return _anchored_fresh(ctx, others, rnd, x, side)

    if not J:
        info = _ball_info(g_s, x, r_new)
        if any(w <= ctx.N0 for w in info.dist):
            # the ball grazes the core without any pebble nearby: anchor
            # the reply so the shared core lines up exactly
            return _anchored_fresh(ctx, others, rnd, x, side)
        rank, cycle = _ball_cycle(info)
        if rank == 1:
            return _far_pod(ctx, others, rnd, x, side, info, cycle)
        if rank == 0:
            return _far_fresh(ctx, others, rnd, x, side)
        raise ExhaustionError(f"ball of {x} has cycle rank {rank}")

    j23 = [i for i in J if others[i].tag in (2, 3)]
    if j23:
        return _host_mirror(ctx, others, rnd, x, side, j23)
    # only shared-core pebbles nearby: x is within radius of a core vertex,
    # so the anchored construction applies and distances decompose there
    return _anchored_fresh(ctx, others, rnd, x, side)


def _verify_reply(ctx, others, rnd, rec):
    """Distance dichotomy of the new pebble against every earlier one, and
    freedom from accidental coincidences, checked before committing."""
    r_new = rho(ctx.R, rnd)
    for j, other in others.items():
        if rec.y == other.y and rec.x != other.x:
            raise ExhaustionError(f"reply {rec.y} collides with pebble {j}")
        if rec.x == other.x and rec.y != other.y:
            raise ExhaustionError(f"vertex {rec.x} already paired differently")
        d1 = _capped_dist(ctx.h1, rec.x, other.x, r_new)
        d2 = _capped_dist(ctx.h2, rec.y, other.y, r_new)
        if d1 != d2:
            raise ExhaustionError(
                f"distance pattern to pebble {j} broken: {d1} vs {d2} "
                f"within radius {r_new}"
            )


def _nearest_core_tail(ctx, side, x, cap):
    """Nearest core vertex u to x (lexicographic on ties), its distance d0,
    and the lexicographically least shortest path [u, ..., x]. Interior
    path vertices are automatically outside the core (a core vertex on the
    way would be nearer). Raises when no core vertex is within cap."""
    g = ctx.graph(side)
    if x <= ctx.N0:
        return x, 0, [x]
    best = None
    for u in range(1, ctx.N0 + 1):
        d = _capped_dist(g, u, x, cap)
        if d < INF and (best is None or d < best[1]):
            best = (u, d)
    if best is None:
        raise ExhaustionError(f"no core vertex within {cap} of {x}")
    u, d0 = best
    du = _dists_capped(g, [u], d0)
    path = [x]
    while path[-1] != u:
        path.append(
            min(w for w in _nbrs(g, path[-1]) if du.get(w, INF) == du[path[-1]] - 1)
        )
    path.reverse()
    return u, d0, path


def _core_region(ctx, u, radius) -> frozenset:
    """Core vertices within the given radius of u inside H|[1..N0]."""
    if radius < 0:
        return frozenset()
    return frozenset(
        v for v in range(1, ctx.N0 + 1) if ctx.core_pair_dist(v, u) <= radius
    )


def _same_anchor_first_steps(ctx, others, u, reply_side) -> set:
    """First steps below the anchor u already used by earlier anchored
    pebbles on the reply side; fresh paths must branch elsewhere so that
    distances through u stay additive."""
    banned = set()
    for rec in others.values():
        if rec.tag == 3 and rec.u == u:
            banned.add(rec.first2 if reply_side == 2 else rec.first1)
    banned.discard(0)
    return banned


def _fresh_path(g, start, length, banned_first, forbidden):
    """Lexicographically least simple path of the exact length from start:
    first step outside banned_first, every vertex outside forbidden.
    Backtracking DFS; returns [start, ..., end] or None."""
    path = [start]
    used = {start}

    def descend():
        if len(path) == length + 1:
            return True
        for w in _nbrs(g, path[-1]):
            if len(path) == 1 and w in banned_first:
                continue
            if w in forbidden or w in used:
                continue
            path.append(w)
            used.add(w)
            if descend():
                return True
            used.discard(path.pop())
        return False

    return path if descend() else None


def _anchored_record(ctx, rnd, side, tail_s, tail_r, extra=()) -> PebbleRecord:
    """Assemble the anchored record for mirrored tails [u, ..., x] and
    [u, ..., y] on the opponent and reply sides."""
    r_new = rho(ctx.R, rnd)
    u, d0 = tail_s[0], len(tail_s) - 1
    region = _core_region(ctx, u, r_new - d0)
    pairs = list(zip(tail_s, tail_r))
    if side == 2:
        pairs = [(bb, aa) for aa, bb in pairs]
    fmap = _merge_fmap({v: v for v in region}, pairs, extra)
    x, y = tail_s[-1], tail_r[-1]
    x1, y1 = (x, y) if side == 1 else (y, x)
    f_s, f_r = tail_s[1], tail_r[1]
    f1, f2 = (f_s, f_r) if side == 1 else (f_r, f_s)
    return PebbleRecord(
        x=x1, y=y1, rd=rnd, tag=3, u=u, d0=d0, core=region,
        first1=f1, first2=f2, fmap=tuple(sorted(fmap.items())),
    )


def _anchored_fresh(ctx, others, rnd, x, side) -> PebbleRecord:
    """Near-core reply anchored at x's nearest core vertex u: a fresh path
    of the exact length d0 leaving the core immediately, branching away
    from the first steps of earlier pebbles anchored at the same u."""
    r_new = rho(ctx.R, rnd)
    u, d0, tail_s = _nearest_core_tail(ctx, side, x, r_new)
    if d0 == 0:
        return _mirror_in_place(ctx, rnd, x, side)
    g_r = ctx.graph(3 - side)
    banned = _same_anchor_first_steps(ctx, others, u, 3 - side)
    tail_r = _fresh_path(g_r, u, d0, banned, set(range(1, ctx.N0 + 1)))
    if tail_r is None:
        raise ExhaustionError(f"no fresh anchored path of length {d0} from {u}")
    return _anchored_record(ctx, rnd, side, tail_s, tail_r)


def _far_fresh(ctx, others, rnd, x, side) -> PebbleRecord:
    """Far tree reply: a vertex one past the round radius down a fresh
    branch below a seed vertex, far from every pebble, cycle-free ball."""
    r_new = rho(ctx.R, rnd)
    g_r = ctx.graph(3 - side)
    cd_r = ctx.core_dist(3 - side)
    core_block = set(range(1, ctx.N0 + 1))
    reply_balls = [
        _dists_capped(g_r, [rec.side_vertex(3 - side)], r_new)
        for rec in others.values()
    ]
    forbidden = set(core_block)
    for ball in reply_balls:
        forbidden.update(ball)
    for u in range(1, ctx.n0 + 1):
        for v in _nbrs(g_r, u):
            if v in forbidden:
                continue
            path = _fresh_path(g_r, v, r_new, set(), forbidden)
            if path is None:
                continue
            y = path[-1]
            if int(cd_r[y]) != r_new + 1:
                continue
            info = _ball_info(g_r, y, r_new)
            if info.nontree or any(w <= ctx.N0 for w in info.dist):
                continue
            x1, y1 = (x, y) if side == 1 else (y, x)
            return PebbleRecord(x=x1, y=y1, rd=rnd, tag=2, kind="tree", fmap=((x1, y1),))
    raise ExhaustionError("no fresh far branch below any seed vertex")


def _far_pod(ctx, others, rnd, x, side, info, cycle) -> PebbleRecord:
    """Far unicyclic reply: the structurally matching position near an
    unused supply cycle of the same length on the reply side."""
    r_new = rho(ctx.R, rnd)
    g_s = ctx.graph(side)
    g_r = ctx.graph(3 - side)
    b = len(cycle)
    delta = min(info.dist[v] for v in cycle)
    c1 = min(v for v in cycle if info.dist[v] == delta)
    # BFS parents point toward the center, so the chain from c1 runs to x
    path_s = [c1]
    while path_s[-1] != x:
        path_s.append(info.parent[path_s[-1]])
    cset = set(cycle)
    # downstream profile along the entry path: each vertex's full hanging
    # code away from its predecessor (and off the cycle). Full, not trimmed:
    # the approach path consumes one branch at the entry vertex, so entry
    # points with different branch counts give different rooted balls even
    # when their trimmed codes agree.
    want = []
    for k, v in enumerate(path_s):
        avoid = (cset - {v}) | ({path_s[k - 1]} if k else set())
        want.append(_hang_code(g_s, v, avoid, r_new, None))

    reply_pebbles = [rec.side_vertex(3 - side) for rec in others.values()]
    for cand in ctx.cycles(3 - side).get(b, ()):
        if not all(v > ctx.N0 for v in cand):
            continue
        dist_out = _dists_capped(g_r, cand, r_new + delta + 1)
        if any(dist_out.get(p, INF) <= r_new + delta for p in reply_pebbles):
            continue
        pairing = _align_cycles(ctx, side, cycle, cand, r_new)
        if pairing is None:
            continue
        path_r = _descend_matching(ctx, 3 - side, pairing[c1], cand, want, r_new)
        if path_r is None:
            continue
        y = path_r[-1]
        pairs = list(pairing.items()) + list(zip(path_s, path_r))
        if side == 2:
            pairs = [(bb, aa) for aa, bb in pairs]
        fmap = _merge_fmap(pairs)
        x1, y1 = (x, y) if side == 1 else (y, x)
        cyc1, cyc2 = (cycle, cand) if side == 1 else (cand, cycle)
        return PebbleRecord(
            x=x1, y=y1, rd=rnd, tag=2, kind="uni", cyc_len=b, cyc_dist=delta,
            cycle1=tuple(cyc1), cycle2=tuple(cyc2),
            fmap=tuple(sorted(fmap.items())),
        )
    raise ExhaustionError(f"no free matching {b}-cycle on the reply side")


def _align_cycles(ctx, side, cyc_s, cyc_r, radius):
    """Map the opponent-side cycle onto the reply-side cycle so the full
    hanging profiles agree position by position; None when no rotation or
    reflection works."""
    g_s, g_r = ctx.graph(side), ctx.graph(3 - side)
    set_s, set_r = set(cyc_s), set(cyc_r)
    code_s = [_hang_code(g_s, v, set_s - {v}, radius, None) for v in cyc_s]
    k = len(cyc_s)
    for seq in (list(cyc_r), list(cyc_r)[::-1]):
        code_r = [_hang_code(g_r, v, set_r - {v}, radius, None) for v in seq]
        for s in range(k):
            if all(code_s[i] == code_r[(s + i) % k] for i in range(k)):
                return {cyc_s[i]: seq[(s + i) % k] for i in range(k)}
    return None


def _descend_matching(ctx, side_r, start, cycle_r, want, radius):
    """Walk down from a cycle vertex on the reply side matching the
    downstream code sequence `want` (want[0] being the cycle vertex's own
    hanging code). Returns the path or None."""
    g = ctx.graph(side_r)
    cset = set(cycle_r)
    if _hang_code(g, start, cset - {start}, radius, None) != want[0]:
        return None
    path = [start]
    for k in range(1, len(want)):
        found = None
        for w in sorted(_nbrs(g, path[-1])):
            if w in cset or w in path:
                continue
            if _hang_code(g, w, {path[-1]}, radius, None) == want[k]:
                found = w
                break
        if found is None:
            return None
        path.append(found)
    return path


def _mirror_in_place(ctx, rnd, x, side) -> PebbleRecord:
    """Reply on the identical vertex: a core vertex whose whole geodesic
    pattern lives inside the shared core. Recorded as anchored at itself
    with an empty hanging path."""
    if x > ctx.N0:
        raise ExhaustionError(f"in-place reply for non-core vertex {x}")
    r_new = rho(ctx.R, rnd)
    region = _core_region(ctx, x, r_new)
    fmap = _merge_fmap({v: v for v in region}, {x: x})
    return PebbleRecord(
        x=x, y=x, rd=rnd, tag=3, u=x, d0=0, core=region,
        fmap=tuple(sorted(fmap.items())),
    )


def _mirror_descend(ctx, side, chain, anchor_r, fwd, banned_first, radius):
    """Mirror chain[1:] on the reply side starting from anchor_r, matching
    downstream hanging codes step by step, staying clear of the already
    mapped skeleton. chain[0] maps to anchor_r."""
    g_s = ctx.graph(side)
    g_r = ctx.graph(3 - side)
    arity = ctx.m - 1
    used_images = set(fwd.values()) if side == 1 else set(fwd.keys())
    path_r = [anchor_r]
    for k in range(1, len(chain)):
        want = _hang_code(g_s, chain[k], {chain[k - 1]}, radius, arity)
        found = None
        for w in sorted(_nbrs(g_r, path_r[-1])):
            if w in used_images or w in path_r or w <= ctx.N0:
                continue
            if k == 1 and w in banned_first:
                continue
            if _hang_code(g_r, w, {path_r[-1]}, radius, arity) == want:
                found = w
                break
        if found is None:
            return None
        path_r.append(found)
    return path_r


def _host_mirror(ctx, others, rnd, x, side, j23) -> PebbleRecord:
    """Far vertex near an earlier detached or anchored pebble: mirror x
    through the host's stored skeleton, extending it down fresh branches
    where x lies outside the mapped part."""
    r_new = rho(ctx.R, rnd)
    g_s = ctx.graph(side)
    host = max(j23, key=lambda i: (others[i].rd, i))
    rec = others[host]
    fwd = rec.forward() if side == 1 else rec.backward()
    if x in fwd:
        y = fwd[x]
        x1, y1 = (x, y) if side == 1 else (y, x)
        return _record_from_balls(ctx, rnd, x1, y1, dict(rec.fmap))
    # BFS from x to the nearest mapped vertex (lexicographic tie-break)
    dist = {x: 0}
    parent = {}
    frontier = [x]
    hits = []
    d = 0
    while frontier and not hits and d < 2 * r_new:
        nxt = []
        for v in frontier:
            for w in _nbrs(g_s, v):
                if w not in dist:
                    dist[w] = d + 1
                    parent[w] = v
                    nxt.append(w)
                    if w in fwd:
                        hits.append(w)
        frontier = nxt
        d += 1
    if not hits:
        raise ExhaustionError(f"no stored skeleton within reach of {x}")
    v1 = min(hits)
    chain = [v1]
    while chain[-1] != x:
        chain.append(parent[chain[-1]])
    path_r = _mirror_descend(ctx, side, chain, fwd[v1], dict(rec.fmap), set(), r_new)
    if path_r is None:
        raise ExhaustionError(f"cannot mirror {chain} through pebble {host}")
    y = path_r[-1]
    pairs = list(zip(chain, path_r))
    if side == 2:
        pairs = [(bb, aa) for aa, bb in pairs]
    fmap = _merge_fmap(dict(rec.fmap), pairs)
    x1, y1 = (x, y) if side == 1 else (y, x)
    return _record_from_balls(ctx, rnd, x1, y1, fmap)


def _anchored_mirror(ctx, others, rnd, x, side, j3) -> PebbleRecord:
    """Near-seed vertex inside an anchored pebble's radius: anchor at x's
    own nearest core vertex, reuse the host skeleton for the shared prefix
    of the hanging path, and mirror the rest down matching fresh branches.
    High girth makes short core-to-vertex paths unique outside the core, so
    the mapped part of the tail is always a contiguous prefix."""
    r_new = rho(ctx.R, rnd)
    u, d0, tail_s = _nearest_core_tail(ctx, side, x, r_new)
    if d0 == 0:
        return _mirror_in_place(ctx, rnd, x, side)
    host = max(j3, key=lambda i: (others[i].rd, i))
    rec = others[host]
    fwd = rec.forward() if side == 1 else rec.backward()
    k_last = -1
    for k, v in enumerate(tail_s):
        if v not in fwd:
            break
        k_last = k
    if k_last < 0:
        # the host skeleton does not reach x's anchor; distances decompose
        # through the core, so a fresh anchored reply is sound
        return _anchored_fresh(ctx, others, rnd, x, side)
    prefix_r = [fwd[tail_s[i]] for i in range(k_last + 1)]
    banned = _same_anchor_first_steps(ctx, others, u, 3 - side) if k_last == 0 else set()
    chain = tail_s[k_last:]
    path_r = _mirror_descend(ctx, side, chain, prefix_r[-1], dict(rec.fmap), banned, r_new)
    if path_r is None:
        raise ExhaustionError(f"cannot mirror anchored tail {chain}")
    tail_r = prefix_r[:-1] + path_r
    return _anchored_record(ctx, rnd, side, tail_s, tail_r, extra=dict(rec.fmap))


def _record_from_balls(ctx, rnd, x1, y1, fmap) -> PebbleRecord:
    """Assemble a mirrored pebble's record from its own neighborhoods."""
    r_new = rho(ctx.R, rnd)
    info1 = _ball_info(ctx.h1, x1, r_new)
    info2 = _ball_info(ctx.h2, y1, r_new)
    rank1, cyc1 = _ball_cycle(info1)
    rank2, cyc2 = _ball_cycle(info2)
    if rank1 != rank2:
        raise ExhaustionError(f"mirrored balls disagree: ranks {rank1}/{rank2}")
    fmap = _merge_fmap(fmap, {x1: y1})
    if any(v <= ctx.N0 for v in info1.dist) or any(v <= ctx.N0 for v in info2.dist):
        u, d0, tail1 = _nearest_core_tail(ctx, 1, x1, r_new)
        u2, d02, tail2 = _nearest_core_tail(ctx, 2, y1, r_new)
        if u2 != u or d02 != d0:
            raise ExhaustionError(f"mirrored anchors disagree: {u}/{d0} vs {u2}/{d02}")
        region = _core_region(ctx, u, r_new - d0)
        fmap = _merge_fmap(fmap, {v: v for v in region})
        f1 = tail1[1] if d0 else 0
        f2 = tail2[1] if d0 else 0
        return PebbleRecord(
            x=x1, y=y1, rd=rnd, tag=3, u=u, d0=d0, core=region,
            first1=f1, first2=f2, fmap=tuple(sorted(fmap.items())),
        )
    if rank1 == 1:
        delta = min(info1.dist[v] for v in cyc1)
        return PebbleRecord(
            x=x1, y=y1, rd=rnd, tag=2, kind="uni",
            cyc_len=len(cyc1), cyc_dist=delta,
            cycle1=tuple(cyc1), cycle2=tuple(cyc2),
            fmap=tuple(sorted(fmap.items())),
        )
    return PebbleRecord(
        x=x1, y=y1, rd=rnd, tag=2, kind="tree", fmap=tuple(sorted(fmap.items()))
    )


# ---------------------------------------------------------------------------
# self check: re-derive every recorded property from scratch


def self_check(ctx: MatchContext, state: StrategyState, rnd: int = None) -> list:
    """Verify every recorded property, the stored skeletons, the pairwise
    distance dichotomy, and the global partial isomorphism. Returns a list
    of human-readable violations (empty means fully verified)."""
    _require_valid(ctx)
    out = []
    rnd = state.round if rnd is None else rnd
    recs = state.records
    for i, rec in sorted(recs.items()):
        if rec.rd > rnd:
            out.append(f"pebble {i}: recorded round {rec.rd} beyond {rnd}")
        prefix = f"pebble {i} ({rec.x},{rec.y})"
        if rec.tag == 1:
            out += _check_tag1(ctx, rec, prefix)
        elif rec.tag == 2:
            out += _check_tag2(ctx, rec, prefix)
        elif rec.tag == 3:
            out += _check_tag3(ctx, rec, prefix)
        else:
            out.append(f"{prefix}: unknown tag {rec.tag}")
        out += _check_fmap(ctx, rec, recs, prefix)
    out += _check_pairs(ctx, recs)
    out += _check_partial_iso(ctx, recs)
    return out


def _check_tag1(ctx, rec, prefix) -> list:
    out = []
    if rec.x != rec.y:
        out.append(f"{prefix}: shared-core vertices differ")
    if rec.x > ctx.N0:
        out.append(f"{prefix}: shared-core vertex outside the core")
        return out
    r = rho(ctx.R, rec.rd)
    d = ctx.core_set_dist(rec.x)
    if d > r:
        out.append(f"{prefix}: in-core seed distance {d} exceeds {r}")
    return out


def _is_pendant_ball(g, info) -> bool:
    """Vertices strictly inside the ball keep all neighbors inside; the
    boundary sphere is exempt (its edges continue outward)."""
    for v, dv in info.dist.items():
        if dv < info.radius:
            if any(w not in info.dist for w in _nbrs(g, v)):
                return False
    return True


def _ball_tree(g, info) -> RootedTree:
    """The ball as a rooted tree over the BFS parents (valid for rank 0)."""
    label = {}
    parent = []
    for v in info.order:
        label[v] = len(parent) + 1
        parent.append(label[info.parent[v]] if v != info.center else 0)
    return RootedTree(parent)


def _ball_unicyclic(g, info) -> RootedUnicyclic:
    """The ball as a rooted unicyclic structure (valid for rank 1)."""
    verts = sorted(info.dist)
    sub, orig = induced_subgraph(g, verts)
    root = orig.index(info.center) + 1
    return RootedUnicyclic(sub, root)


def _check_tag2(ctx, rec, prefix) -> list:
    out = []
    r = rho(ctx.R, rec.rd)
    infos = {}
    for side, v in ((1, rec.x), (2, rec.y)):
        g = ctx.graph(side)
        info = _ball_info(g, v, r)
        infos[side] = info
        if any(w <= ctx.n0 for w in info.dist):
            out.append(f"{prefix}: H{side} ball meets the seed set")
        if not _is_pendant_ball(g, info):
            out.append(f"{prefix}: H{side} ball not pendant inside its sphere")
        rank, cycle = _ball_cycle(info)
        if rec.kind == "tree":
            if rank != 0:
                out.append(f"{prefix}: H{side} ball has a cycle, kind is tree")
                continue
            t = _ball_tree(g, info)
            if t.depth() != r:
                out.append(f"{prefix}: H{side} ball tree depth {t.depth()} != {r}")
            elif canon_code(t, ctx.m - 1) != perfect_code(ctx.m - 1, r, cap=ctx.m - 1):
                out.append(f"{prefix}: H{side} ball tree not ({ctx.m - 1})-trivial")
        elif rec.kind == "uni":
            if rank != 1:
                out.append(f"{prefix}: H{side} ball cycle rank {rank}, kind uni")
                continue
            stored = rec.cycle1 if side == 1 else rec.cycle2
            if set(stored) != set(cycle):
                out.append(f"{prefix}: H{side} stored cycle differs from ball cycle")
            if len(cycle) != rec.cyc_len:
                out.append(
                    f"{prefix}: H{side} cycle length {len(cycle)} recorded {rec.cyc_len}"
                )
            delta = min(info.dist[w] for w in cycle)
            if delta != rec.cyc_dist:
                out.append(f"{prefix}: H{side} cycle distance {delta} != {rec.cyc_dist}")
        else:
            out.append(f"{prefix}: detached record without kind")
    if out:
        return out
    if rec.kind == "tree":
        t1 = _ball_tree(ctx.h1, infos[1])
        t2 = _ball_tree(ctx.h2, infos[2])
        if canon_code(t1, ctx.m - 1) != canon_code(t2, ctx.m - 1):
            out.append(f"{prefix}: trimmed ball trees differ across sides")
    else:
        c1 = _ball_unicyclic(ctx.h1, infos[1])
        c2 = _ball_unicyclic(ctx.h2, infos[2])
        if unicyclic_code(c1, ctx.m - 2) != unicyclic_code(c2, ctx.m - 2):
            out.append(f"{prefix}: rooted unicyclic neighborhoods differ")
    return out


def _check_tag3(ctx, rec, prefix) -> list:
    out = []
    r = rho(ctx.R, rec.rd)
    if rec.u > ctx.N0:
        out.append(f"{prefix}: anchor {rec.u} outside the core")
        return out
    if rec.u not in rec.core:
        out.append(f"{prefix}: anchor {rec.u} outside its region")
        return out
    expect = _core_region(ctx, rec.u, r - rec.d0)
    if expect != rec.core:
        out.append(f"{prefix}: region mismatch {sorted(rec.core)} vs {sorted(expect)}")
    if rec.d0 == 0:
        if rec.x != rec.y or rec.x != rec.u:
            out.append(f"{prefix}: empty hanging path but pebbles off anchor")
        return out
    spine_codes = []
    for side, g, v in ((1, ctx.h1, rec.x), (2, ctx.h2, rec.y)):
        info = _ball_info(g, v, r)
        if info.dist.get(rec.u) != rec.d0:
            out.append(
                f"{prefix}: H{side} anchor at distance "
                f"{info.dist.get(rec.u, 'inf')}, recorded {rec.d0}"
            )
            return out
        # extra (non-tree) ball edges may only live inside the core
        for a, b in info.nontree:
            if a > ctx.N0 or b > ctx.N0:
                out.append(f"{prefix}: H{side} ball cycle outside the core")
                return out
        # tree part: the pebble's component after cutting the core away
        cut = set(range(1, ctx.N0 + 1)) - {rec.u}
        tpart = _component(g, info, v, cut)
        if rec.u not in tpart:
            out.append(f"{prefix}: H{side} anchor not reached by the tree part")
            return out
        # interior tree vertices keep their full degree inside the ball
        for w in tpart:
            if w == rec.u or info.dist[w] >= r:
                continue
            inside = sum(1 for z in _nbrs(g, w) if z in info.dist)
            if inside != len(_nbrs(g, w)):
                out.append(f"{prefix}: H{side} tree vertex {w} leaks outside")
                break
        # the anchor's ball edges: tree edges plus core edges, nothing else
        u_tree = sum(1 for z in _nbrs(g, rec.u) if z in tpart)
        u_core = sum(1 for z in _nbrs(g, rec.u) if z <= ctx.N0 and z in info.dist)
        u_ball = sum(1 for z in _nbrs(g, rec.u) if z in info.dist)
        if u_tree + u_core != u_ball:
            out.append(f"{prefix}: H{side} anchor edges leak outside tree+core")
        # spine profile: trimmed hanging codes along the pebble-anchor path
        spine = _tree_path(info, v, rec.u, tpart)
        if spine is None:
            out.append(f"{prefix}: H{side} no tree path from pebble to anchor")
            return out
        codes = []
        for w in spine[:-1]:
            k = info.dist[w]
            avoid = (set(spine) | set(range(1, ctx.N0 + 1))) - {w}
            codes.append(_hang_code(g, w, avoid, r - k, ctx.m - 1))
        spine_codes.append(tuple(codes))
        # forest part: every remaining outside-ball component hangs off
        # exactly one region vertex in a trivially trimmed tree
        rest = {w for w in info.dist if w not in tpart and w > ctx.N0}
        for comp in _components(g, info, rest):
            roots = {
                z
                for w in comp
                for z in _nbrs(g, w)
                if z in info.dist and z <= ctx.N0
            }
            if len(roots) != 1:
                out.append(
                    f"{prefix}: H{side} hanging component touches {sorted(roots)}"
                )
                continue
            root = next(iter(roots))
            if root not in rec.core:
                out.append(f"{prefix}: H{side} forest root {root} outside region")
            tops = sorted(w for w in comp if root in _nbrs(g, w))
            for w in tops:
                depth = r - info.dist[w]
                code = _hang_code(
                    g, w, {root} | set(range(1, ctx.N0 + 1)), depth, ctx.m - 1
                )
                if code != perfect_code(ctx.m - 1, depth, cap=ctx.m - 1):
                    out.append(f"{prefix}: H{side} forest tree at {w} not trivial")
    if len(spine_codes) == 2 and spine_codes[0] != spine_codes[1]:
        out.append(f"{prefix}: spine profiles differ across sides")
    if rec.first1 or rec.first2:
        if rec.first1 not in _nbrs(ctx.h1, rec.u) or rec.first2 not in _nbrs(
            ctx.h2, rec.u
        ):
            out.append(f"{prefix}: recorded first steps not adjacent to anchor")
    return out


def _component(g, info, start, cut):
    """Ball vertices reachable from start without entering the cut set."""
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in _nbrs(g, v):
            if w in info.dist and w not in seen and w not in cut:
                seen.add(w)
                stack.append(w)
    return seen


def _components(g, info, verts):
    """Connected components of a ball vertex subset."""
    left = set(verts)
    comps = []
    while left:
        start = left.pop()
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in _nbrs(g, v):
                if w in left:
                    left.discard(w)
                    comp.add(w)
                    stack.append(w)
        comps.append(comp)
    return comps


def _tree_path(info, a, b, allowed):
    """Path from a to b along the ball's BFS parents inside `allowed`."""
    path = [b]
    v = b
    while v != a:
        v = info.parent.get(v)
        if v is None or (v != a and v not in allowed):
            return None
        path.append(v)
    path.reverse()
    return path


def _check_fmap(ctx, rec, recs, prefix) -> list:
    out = []
    fwd = rec.forward()
    if fwd.get(rec.x) != rec.y:
        out.append(f"{prefix}: skeleton misses the pebble pair itself")
    vals = list(fwd.values())
    if len(set(vals)) != len(vals):
        out.append(f"{prefix}: skeleton not injective")
    dom = sorted(fwd)
    for i, a in enumerate(dom):
        for b in dom[i + 1 :]:
            if ctx.h1.adjacent(a, b) != ctx.h2.adjacent(fwd[a], fwd[b]):
                out.append(f"{prefix}: skeleton breaks adjacency at ({a},{b})")
    if rec.tag == 3:
        for v in rec.core:
            if fwd.get(v, v) != v:
                out.append(f"{prefix}: skeleton moves core vertex {v}")
    # earlier pebbles inside this pebble's radius ride along the skeleton
    r_i = rho(ctx.R, rec.rd)
    for j, other in sorted(recs.items()):
        if other is rec or other.rd >= rec.rd:
            continue
        d = _capped_dist(ctx.h1, rec.x, other.x, r_i)
        if d > r_i:
            continue
        if fwd.get(other.x) != other.y:
            out.append(
                f"{prefix}: nearby earlier pebble ({other.x},{other.y}) "
                "missing from skeleton"
            )
        if other.tag == 1:
            exit_s = _pair_exit(ctx, 1, other.x, rec.x, r_i)
            exit_r = _pair_exit(ctx, 2, other.y, rec.y, r_i)
            if exit_s != exit_r:
                out.append(f"{prefix}: core-exit mismatch toward pebble {j}")
            elif exit_s is not None and fwd.get(exit_s) != exit_s:
                out.append(f"{prefix}: skeleton moves exit vertex {exit_s}")
    return out


def _pair_exit(ctx, side, frm, to, cap):
    """Exit vertex of the lexicographic geodesic from a core vertex toward
    another vertex; None when it never leaves the core or is out of reach."""
    g = ctx.graph(side)
    dto = _dists_capped(g, [to], cap)
    if frm not in dto:
        return None
    path = [frm]
    while path[-1] != to:
        v = min(w for w in _nbrs(g, path[-1]) if dto.get(w, INF) == dto[path[-1]] - 1)
        path.append(v)
    u = None
    for w in path:
        if w > ctx.N0:
            break
        u = w
    return u


def _check_pairs(ctx, recs) -> list:
    out = []
    items = sorted(recs.items())
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            i, ri = items[a]
            j, rj = items[b]
            if ri.rd == rj.rd:
                if (ri.x, ri.y) != (rj.x, rj.y):
                    out.append(f"pebbles {i},{j}: equal round {ri.rd} on distinct pairs")
                continue
            late = ri if ri.rd > rj.rd else rj
            r = rho(ctx.R, late.rd)
            d1 = _capped_dist(ctx.h1, ri.x, rj.x, r)
            d2 = _capped_dist(ctx.h2, ri.y, rj.y, r)
            if d1 != d2:  # both-far shows up as INF == INF
                out.append(
                    f"pebbles {i},{j}: distance dichotomy fails at radius {r} "
                    f"({d1} vs {d2})"
                )
    return out


def _check_partial_iso(ctx, recs) -> list:
    out = []
    items = sorted(recs.items())
    for a in range(len(items)):
        i, ri = items[a]
        for b in range(a + 1, len(items)):
            j, rj = items[b]
            if (ri.x == rj.x) != (ri.y == rj.y):
                out.append(f"pebbles {i},{j}: equality pattern differs")
            elif ri.x != rj.x:
                e1 = ctx.h1.adjacent(ri.x, rj.x)
                e2 = ctx.h2.adjacent(ri.y, rj.y)
                if e1 != e2:
                    out.append(f"pebbles {i},{j}: adjacency differs ({e1} vs {e2})")
    return out


# ---------------------------------------------------------------------------
# match drivers


@dataclass
class MatchResult:
    ok: bool
    rounds: int
    fail_round: int = 0
    fail_kind: str = ""
    violations: tuple = ()
    moves: tuple = ()


def play_match(ctx, spoiler, rounds=None, check=True) -> MatchResult:
    """Run a match against a move generator.

    `spoiler(state, rnd)` returns (pebble, side, vertex). The result records
    any partial-isomorphism break, reply exhaustion, or self_check
    violation, with the round it occurred in.
    """
    _require_valid(ctx)
    rounds = ctx.R if rounds is None else min(rounds, ctx.R)
    state = empty_state(ctx)
    moves = []
    for rnd in range(1, rounds + 1):
        pebble, side, vertex = spoiler(state, rnd)
        try:
            y, state = respond(ctx, state, rnd, pebble, vertex, side)
        except ExhaustionError as e:
            return MatchResult(False, rnd - 1, rnd, f"exhaustion: {e}", (), tuple(moves))
        moves.append((rnd, pebble, side, vertex, y))
        iso = _check_partial_iso(ctx, state.records)
        if iso:
            return MatchResult(
                False, rnd, rnd, "partial isomorphism broken", tuple(iso), tuple(moves)
            )
        if check:
            bad = self_check(ctx, state, rnd)
            if bad:
                return MatchResult(False, rnd, rnd, "self_check", tuple(bad), tuple(moves))
    return MatchResult(True, rounds, moves=tuple(moves))


def random_spoiler(ctx, stream: Stream):
    """Uniform random opponent."""

    def move(state, rnd):
        pebble = 1 + stream.randbelow(ctx.pebbles)
        side = 1 + stream.randbelow(2)
        vertex = 1 + stream.randbelow(ctx.graph(side).n)
        return pebble, side, vertex

    return move


def mixed_spoiler(ctx, stream: Stream):
    """Adversarial-leaning opponent: mixes uniform moves with moves near
    the core, near supply cycles, and near already-pebbled vertices."""
    pools = {}
    for side in (1, 2):
        g = ctx.graph(side)
        near_core = sorted(_dists_capped(g, range(1, ctx.n0 + 1), rho(ctx.R, 1) + 1))
        pod_verts = [v for lst in ctx.cycles(side).values() for cyc in lst for v in cyc]
        near_pods = sorted(_dists_capped(g, pod_verts, rho(ctx.R, 1))) if pod_verts else []
        pools[side] = (near_core, near_pods)

    def move(state, rnd):
        pebble = 1 + stream.randbelow(ctx.pebbles)
        side = 1 + stream.randbelow(2)
        g = ctx.graph(side)
        near_core, near_pods = pools[side]
        kind = stream.randbelow(4)
        if kind == 0 and near_core:
            vertex = near_core[stream.randbelow(len(near_core))]
        elif kind == 1 and near_pods:
            vertex = near_pods[stream.randbelow(len(near_pods))]
        elif kind == 2 and state.records:
            recs = sorted(state.records.values(), key=lambda rr: (rr.x, rr.y))
            rec = recs[stream.randbelow(len(recs))]
            ball = sorted(
                _dists_capped(g, [rec.side_vertex(side)], 2 * rho(ctx.R, rnd) + 1)
            )
            vertex = ball[stream.randbelow(len(ball))]
        else:
            vertex = 1 + stream.randbelow(g.n)
        return pebble, side, vertex

    return move


@dataclass
class PlayoutReport:
    trials: int
    losses: int
    violation_trials: int
    moves: int

    @property
    def clean(self) -> bool:
        return self.losses == 0 and self.violation_trials == 0


def random_playouts(ctx, trials, seed, mixed=True, check=True) -> PlayoutReport:
    """Play many randomized matches; count losses and check violations."""
    losses = violated = moves = 0
    for t in range(trials):
        stream = Stream(seed, 7001, t)
        spoiler = mixed_spoiler(ctx, stream) if mixed else random_spoiler(ctx, stream)
        result = play_match(ctx, spoiler, check=check)
        moves += len(result.moves)
        if not result.ok:
            if result.fail_kind == "self_check":
                violated += 1
            else:
                losses += 1
    return PlayoutReport(trials, losses, violated, moves)


@dataclass
class SearchReport:
    nodes: int
    losses: int
    violations: int
    complete: bool
    note: str = ""

    @property
    def clean(self) -> bool:
        return self.losses == 0 and self.violations == 0


def exhaustive_round1(ctx, check=True) -> SearchReport:
    """Every possible opening move on both sides (complete for round 1)."""
    _require_valid(ctx)
    nodes = losses = violations = 0
    for side in (1, 2):
        for v in range(1, ctx.graph(side).n + 1):
            nodes += 1
            state = empty_state(ctx)
            try:
                _, state = respond(ctx, state, 1, 1, v, side)
            except ExhaustionError:
                losses += 1
                continue
            if _check_partial_iso(ctx, state.records):
                losses += 1
            elif check and self_check(ctx, state, 1):
                violations += 1
    return SearchReport(nodes, losses, violations, complete=True)


def _move_pool(ctx, state, rnd, far_samples, stream):
    """Candidate opponent moves: complete near the seed set, the supply
    cycles, and the current pebbles; sampled in the far tree-like bulk."""
    r = rho(ctx.R, rnd)
    pool = []
    for side in (1, 2):
        g = ctx.graph(side)
        verts = set()
        verts.update(_dists_capped(g, range(1, ctx.n0 + 1), r + 1))
        for lst in ctx.cycles(side).values():
            for cyc in lst:
                verts.update(_dists_capped(g, cyc, r))
        for rec in state.records.values():
            verts.update(_dists_capped(g, [rec.side_vertex(side)], 2 * r + 1))
        for _ in range(far_samples):
            verts.add(1 + stream.randbelow(g.n))
        pool.extend((side, v) for v in sorted(verts))
    return pool


def exhaustive_search(ctx, far_samples=3, seed=0, budget=None, check=True) -> SearchReport:
    """Depth-first search over opponent move sequences drawn from the
    structured pools of _move_pool. Complete over all interacting moves;
    the far bulk (where every move is equivalent up to the checked
    properties) is covered by samples. Budget caps respond calls."""
    _require_valid(ctx)
    stream = Stream(seed, 7411)
    counter = {"nodes": 0, "losses": 0, "violations": 0, "cut": False}

    def walk(state, rnd):
        if rnd > ctx.R:
            return
        for side, v in _move_pool(ctx, state, rnd, far_samples, stream):
            if budget is not None and counter["nodes"] >= budget:
                counter["cut"] = True
                return
            for pebble in range(1, ctx.pebbles + 1):
                counter["nodes"] += 1
                try:
                    _, nxt = respond(ctx, state, rnd, pebble, v, side)
                except ExhaustionError:
                    counter["losses"] += 1
                    continue
                if _check_partial_iso(ctx, nxt.records):
                    counter["losses"] += 1
                    continue
                if check and self_check(ctx, nxt, rnd):
                    counter["violations"] += 1
                    continue
                walk(nxt, rnd + 1)

    walk(empty_state(ctx), 1)
    note = "pool-complete near structure; far bulk sampled"
    if counter["cut"]:
        note += "; budget cut"
    return SearchReport(
        counter["nodes"],
        counter["losses"],
        counter["violations"],
        complete=not counter["cut"],
        note=note,
    )


# ---------------------------------------------------------------------------
# serialization


def save_context(ctx: MatchContext, file) -> None:
    """JSON with both graphs embedded in the plain text edge format."""
    import io

    if isinstance(file, (str, bytes)) or hasattr(file, "__fspath__"):
        with open(file, "w") as f:
            save_context(ctx, f)
        return
    bufs = []
    for g in (ctx.h1, ctx.h2):
        buf = io.StringIO()
        write_graph(g, buf)
        bufs.append(buf.getvalue())
    json.dump(
        {
            "m": ctx.m,
            "R": ctx.R,
            "n0": ctx.n0,
            "N0": ctx.N0,
            "label": ctx.label,
            "h1": bufs[0],
            "h2": bufs[1],
        },
        file,
    )


def load_context(file) -> MatchContext:
    """Inverse of save_context; the context comes back unvalidated."""
    if isinstance(file, (str, bytes)) or hasattr(file, "__fspath__"):
        with open(file) as f:
            return load_context(f)
    data = json.load(file)
    return MatchContext(
        h1=graph_from_text(data["h1"]),
        h2=graph_from_text(data["h2"]),
        m=data["m"],
        R=data["R"],
        n0=data["n0"],
        N0=data["N0"],
        label=data.get("label", ""),
    )
