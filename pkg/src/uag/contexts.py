"""Builders for validated match contexts.

A synthetic context is a pair of graphs engineered to satisfy every
hypothesis the matching strategy checks: a two-vertex shared core, m supply
triangles per graph placed far from the core and from each other, and a
high-girth m-regular bulk that splices everything together. Each splice
site is a deleted bulk edge whose two half-edges reattach to a core or
triangle vertex, so every vertex keeps degree at least m while all cycles
other than the supply triangles stay longer than any ball the strategy
inspects. Sizes grow like m^(2^R), which is what gates the construction on
the round count; build_context covers R = 1 and R = 2.

harvest_context instead searches the attachment model itself for a valid
pair, growing two independent continuations over a shared prefix and
tallying which hypothesis failed when rejection wins (at practical sizes it
essentially always does, and the tally makes that visible).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .graphs import Graph, complete_graph, distances_from
from .rng import Stream
from .strategy import MatchContext, clean_scale, validate_context


class InfeasibleScale(RuntimeError):
    """Construction refused because the hypothesis scales are out of reach."""


class BuildError(RuntimeError):
    """A randomized construction stage failed for this seed."""


class HarvestError(RuntimeError):
    """No valid pair found in the attachment model; carries the tally."""

    def __init__(self, message, tally):
        super().__init__(message)
        self.tally = tally


def required_girth(R: int) -> int:
    """Girth that keeps bulk balls cycle-free through every round: a cycle
    on l vertices fits inside a radius-floor(l/2) ball, so the first-round
    radius 2^R forces cycles longer than 2*2^R + 1."""
    return 2 ** (R + 1) + 2


def _tree_volume(d: int, depth: int) -> int:
    """Vertices within the given depth of a root in a d-regular tree."""
    if depth <= 0:
        return 1
    return 1 + d * ((d - 1) ** depth - 1) // (d - 2)


@dataclass(frozen=True)
class BuildPlan:
    """Sizes and separations resolved from (m, R) before any randomness."""

    m: int
    R: int
    girth: int
    pods: int  # supply triangles per graph
    core_sites: int  # splice sites feeding the core pair
    pod_sites: int  # splice sites per triangle
    core_gap: int  # bulk distance between core-feeding sites
    pod_gap: int  # bulk distance involving triangle-feeding sites
    block_n: int  # bulk vertices
    total_n: int


def plan(m: int, R: int) -> BuildPlan:
    """Resolve the construction plan, refusing out-of-reach scales.

    The two core vertices each take m+1 half-edges (degree exactly 2+m,
    the strict core-degree floor), every triangle vertex takes enough
    halves to reach degree m, and site separations are set so that every
    composite cycle through the core or a triangle is at least girth-long
    while triangles stay far enough apart and from the core. The bulk size
    is the packed exclusion volume of all sites with 25 percent slack.
    """
    if m < 3:
        raise ValueError("need m >= 3")
    if R < 1:
        raise ValueError("need R >= 1")
    g = required_girth(R)
    if 3**R > clean_scale(R):
        gap = g - 2
        vol = _tree_volume(m, gap)
        raise InfeasibleScale(
            f"round count {R}: the locality radius 3^{R}={3 ** R} outgrows "
            f"the cycle-census scale {clean_scale(R)}, and a girth-{g} bulk "
            f"with site separation {gap} needs roughly {vol:,} vertices per "
            f"splice site before any certification is attempted"
        )
    pods = m
    core_sites = m + 1
    halves = 3 * (m - 2)
    pod_sites = (halves + 1) // 2
    core_gap = g - 2
    pod_gap = g - 3 if m <= 4 else g - 2
    vol = core_sites * _tree_volume(m, core_gap)
    vol += pods * pod_sites * _tree_volume(m, pod_gap)
    block_n = (vol * 5 + 3) // 4
    if m % 2 and block_n % 2:
        block_n += 1
    total_n = 2 + 3 * pods + block_n
    return BuildPlan(
        m, R, g, pods, core_sites, pod_sites, core_gap, pod_gap, block_n, total_n
    )


# ---------------------------------------------------------------------------
# bulk construction: random regular graph, then batch girth repair


def _shuffle(items, stream: Stream) -> None:
    for i in range(len(items) - 1, 0, -1):
        j = stream.randbelow(i + 1)
        items[i], items[j] = items[j], items[i]


def _random_regular(n: int, d: int, stream: Stream, tries: int = 40) -> set:
    """Random d-regular simple graph on 1..n as a set of sorted edge pairs.

    Configuration model: shuffle the n*d half-edge stubs, pair them up, and
    clear the handful of self-loops and duplicates by local swaps with
    random partner pairs; a pairing that resists repair is reshuffled.
    """
    if n * d % 2:
        raise ValueError("n*d must be even")
    stubs = [v for v in range(1, n + 1) for _ in range(d)]
    npairs = len(stubs) // 2
    for _ in range(tries):
        _shuffle(stubs, stream)
        edges = set()
        bad = []
        for i in range(0, len(stubs), 2):
            u, v = stubs[i], stubs[i + 1]
            e = (u, v) if u < v else (v, u)
            if u == v or e in edges:
                bad.append(i)
            else:
                edges.add(e)
        ok = True
        for i in bad:
            u, v = stubs[i], stubs[i + 1]
            fixed = False
            for _ in range(200):
                j = 2 * stream.randbelow(npairs)
                if j == i:
                    continue
                a, b = stubs[j], stubs[j + 1]
                ea = (a, b) if a < b else (b, a)
                if ea not in edges:
                    continue
                e1 = (u, b) if u < b else (b, u)
                e2 = (a, v) if a < v else (v, a)
                if u == b or a == v or e1 == e2 or e1 in edges or e2 in edges:
                    continue
                edges.discard(ea)
                edges.add(e1)
                edges.add(e2)
                stubs[i + 1], stubs[j + 1] = stubs[j + 1], stubs[i + 1]
                fixed = True
                break
            if not fixed:
                ok = False
                break
        if ok:
            return edges
    raise BuildError(f"no simple {d}-regular pairing on {n} vertices")


def _canon_cycle(cyc) -> tuple:
    """Rotate/reflect a cycle vertex sequence to the census convention:
    smallest vertex first, then its smaller cycle neighbor."""
    cyc = [int(v) for v in cyc]
    i = cyc.index(min(cyc))
    rot = cyc[i:] + cyc[:i]
    if rot[1] > rot[-1]:
        rot = [rot[0]] + rot[:0:-1]
    return tuple(rot)


def _probe_cycles(n: int, edges: set, max_len: int) -> set:
    """Deduplicated short cycles found by the probe kernel over all vertices;
    empty certifies girth > max_len."""
    g = Graph(n, np.array(sorted(edges), dtype=np.int32))
    lens, verts = kernels.cycle_probe(
        g._indptr, g._nbrs, max_len, np.arange(1, n + 1, dtype=np.int32)
    )
    found = set()
    pos = 0
    for k in lens:
        found.add(_canon_cycle(verts[pos : pos + k]))
        pos += int(k)
    return found


def _repair_girth(n: int, edges: set, girth: int, stream: Stream, rounds: int = 80) -> set:
    """Push the girth up to the target by degree-preserving edge swaps.

    Each round sweeps the whole graph for cycles below the target and
    breaks one random edge per surviving cycle by swapping it with a random
    disjoint partner edge; a clean sweep is the termination certificate.
    """
    for _ in range(rounds):
        short = _probe_cycles(n, edges, girth - 1)
        if not short:
            return edges
        edge_list = sorted(edges)
        for cyc in sorted(short):
            k = stream.randbelow(len(cyc))
            a, b = cyc[k], cyc[(k + 1) % len(cyc)]
            ea = (a, b) if a < b else (b, a)
            if ea not in edges:
                continue  # already broken this round
            for _ in range(200):
                ecd = edge_list[stream.randbelow(len(edge_list))]
                if ecd not in edges or len({a, b, ecd[0], ecd[1]}) < 4:
                    continue
                c, d = ecd if stream.randbelow(2) else (ecd[1], ecd[0])
                e1 = (a, c) if a < c else (c, a)
                e2 = (b, d) if b < d else (d, b)
                if e1 in edges or e2 in edges:
                    continue
                edges.discard(ea)
                edges.discard(ecd)
                edges.add(e1)
                edges.add(e2)
                break
    else:
        raise BuildError(f"girth {girth} not reached in {rounds} repair rounds")
    return edges


# ---------------------------------------------------------------------------
# splice sites


def _gap(plan_, t1, t2) -> int:
    if t1[0] == "pod" and t2[0] == "pod":
        return plan_.pod_gap
    return plan_.core_gap


def _pick_sites(plan_, edges: set, slots, stream: Stream) -> list:
    """Greedy splice-site selection: one bulk edge per slot with all
    pairwise endpoint distances at least the per-type gap. Distances are
    measured in the intact bulk, which only shrinks them, so acceptance
    here is conservative. Returns (edge, slot) pairs aligned with slots."""
    n = plan_.block_n
    g = Graph(n, np.array(sorted(edges), dtype=np.int32))
    pool = sorted(edges)
    _shuffle(pool, stream)
    max_gap = max(plan_.core_gap, plan_.pod_gap)
    chosen = []  # (edge, slot, distance array from both endpoints)
    it = iter(pool)
    for slot in slots:
        for e in it:
            p, q = e
            ok = True
            for e2, slot2, dist in chosen:
                need = _gap(plan_, slot, slot2)
                dp, dq = int(dist[p]), int(dist[q])
                if (0 <= dp < need) or (0 <= dq < need):
                    ok = False
                    break
            if ok:
                dist = distances_from(g, [p, q], cap=max_gap)
                chosen.append((e, slot, dist))
                break
        else:
            raise BuildError(f"no room for splice site {len(chosen) + 1}")
    return [(e, slot) for e, slot, _ in chosen]


def _pod_halves(m: int) -> list:
    """Triangle-vertex index for each half-edge a triangle consumes, padded
    to an even count (the padded vertex simply ends one degree higher)."""
    halves = [0] * (m - 2) + [1] * (m - 2) + [2] * (m - 2)
    if len(halves) % 2:
        halves.append(2)
    return halves


def _assemble(plan_, block_edges: set, sites: list) -> Graph:
    """Relabel and splice: core on 1..2, triangles on 3..2+3*pods, bulk
    after. Each site edge is deleted; its lower endpoint feeds vertex 1
    (or the first listed triangle half), the upper one vertex 2 (or the
    second half)."""
    m = plan_.m
    off = 2 + 3 * plan_.pods
    halves = _pod_halves(m)
    edges = [(1, 2)]
    for t in range(plan_.pods):
        base = 2 + 3 * t
        edges += [(base + 1, base + 2), (base + 1, base + 3), (base + 2, base + 3)]
    removed = {e for e, _ in sites}
    for u, v in block_edges:
        if (u, v) not in removed:
            edges.append((u + off, v + off))
    for (p, q), slot in sites:
        if slot[0] == "core":
            edges.append((1, p + off))
            edges.append((2, q + off))
        else:
            _, t, s = slot
            base = 2 + 3 * t
            edges.append((base + 1 + halves[2 * s], p + off))
            edges.append((base + 1 + halves[2 * s + 1], q + off))
    return Graph(plan_.total_n, np.array(edges, dtype=np.int32), m_hint=m)


def _one_side(plan_, stream: Stream) -> Graph:
    slots = [("core", j) for j in range(plan_.core_sites)]
    for t in range(plan_.pods):
        slots += [("pod", t, s) for s in range(plan_.pod_sites)]
    for _ in range(3):
        try:
            edges = _random_regular(plan_.block_n, plan_.m, stream)
            edges = _repair_girth(plan_.block_n, edges, plan_.girth, stream)
            sites = _pick_sites(plan_, edges, slots, stream)
            return _assemble(plan_, edges, sites)
        except BuildError:
            continue
    raise BuildError("bulk construction failed repeatedly")


def build_context(
    m: int,
    R: int,
    seed: int,
    identical: bool = False,
    label: str = "",
    deep: bool = False,
    retries: int = 4,
) -> MatchContext:
    """Build and validate a synthetic context; deterministic in the seed.

    Both sides are independent constructions (identical=True reuses side
    one, which is handy for debugging the strategy on a true isomorphism).
    Validation failures, including the rare disconnected bulk, retry the
    whole construction on a derived seed before giving up.
    """
    plan_ = plan(m, R)
    report = None
    for attempt in range(retries):
        h1 = _one_side(plan_, Stream(seed, 11, attempt))
        h2 = h1 if identical else _one_side(plan_, Stream(seed, 22, attempt))
        ctx = MatchContext(
            h1, h2, m, R, label=label or f"m{m}R{R}s{seed}" + ("i" if identical else "")
        )
        report = validate_context(ctx, deep=deep)
        if report.ok:
            return ctx
    raise BuildError(
        f"no valid pair in {retries} attempts; last failures: "
        f"{[c[0] for c in report.failures()]}"
    )


def harvest_context(m: int, R: int, n: int, seed: int, tries: int = 50) -> MatchContext:
    """Search the attachment model for a valid pair over a shared prefix.

    The first growth step after the complete seed graph always yields the
    complete graph on m+1 vertices, so two independent continuations from
    size m+1 share that prefix exactly and the pair is validated with core
    [1..m+1]. Returns the first valid context; otherwise raises
    HarvestError whose tally maps each failed check to how often it failed,
    making the (near-certain, at practical sizes) rejection quantitative.
    """
    if n <= m + 1:
        raise ValueError("need n > m + 1")
    base = complete_graph(m + 1).edge_array()
    tally = {}
    for t in range(tries):
        pair = []
        for side in (1, 2):
            st = Stream(seed, 131, t, side)
            _, grown = kernels.attach_block(st.state, m + 2, n, m)
            pair.append(
                Graph(n, np.concatenate([base, grown]), m_hint=m, _trusted=True)
            )
        ctx = MatchContext(
            pair[0], pair[1], m, R, n0=1, N0=m + 1, label=f"harvest-{seed}-{t}"
        )
        report = validate_context(ctx)
        if report.ok:
            return ctx
        for name, passed, _ in report.checks:
            if not passed:
                tally[name] = tally.get(name, 0) + 1
    raise HarvestError(
        f"no valid pair in {tries} tries at n={n}", dict(sorted(tally.items()))
    )
