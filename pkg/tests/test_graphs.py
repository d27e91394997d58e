"""Graph core: exact attachment law, replay, distances, cycles, balls, I/O."""

import io
import math
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from uag import (
    GenParams,
    Graph,
    Stream,
    attach_step,
    ball,
    complete_graph,
    cycles_up_to,
    distance,
    distances_from,
    generate,
    generate_prefixes,
    graph_from_text,
    induced_subgraph,
    read_graph,
    set_distance,
    write_graph,
)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(g.vertices())
    h.add_edges_from(g.edges())
    return h


def attachment_supports(n: int, m: int) -> list[frozenset]:
    # Oracle: every edge set the process can produce, each equally likely
    # (each step picks uniformly among C(v-1, m) target sets).
    outcomes = [frozenset((u, v) for u, v in combinations(range(1, m + 1), 2))]
    for v in range(m + 1, n + 1):
        outcomes = [
            es | {(t, v) for t in targs}
            for es in outcomes
            for targs in combinations(range(1, v), m)
        ]
    return outcomes


# ---------------------------------------------------------------- generation


def test_complete_graph():
    g = complete_graph(4)
    assert g.n == 4 and g.num_edges == 6
    assert all(g.adjacent(u, v) for u, v in combinations(range(1, 5), 2))
    assert complete_graph(1).num_edges == 0
    with pytest.raises(ValueError):
        complete_graph(0)


def test_params_validation():
    with pytest.raises(ValueError):
        GenParams(3, 0, 1)
    with pytest.raises(ValueError):
        GenParams(2, 3, 1)
    assert generate(GenParams(3, 3, 5)) == complete_graph(3)


def test_generate_counts_and_connectivity():
    g = generate(GenParams(200, 3, seed=1))
    assert g.num_edges == 3 + (200 - 3) * 3
    assert int(g.degrees()[1:].min()) >= 3
    assert nx.is_connected(to_nx(g))
    assert g.m_hint == 3


def test_generate_deterministic_in_seed():
    a = generate(GenParams(50, 2, seed=9))
    b = generate(GenParams(50, 2, seed=9))
    c = generate(GenParams(50, 2, seed=10))
    assert a == b
    assert a != c


def test_generate_matches_exact_law_m2():
    # [DERIVED] with n=5, m=2 the process has 18 equally likely outcomes:
    # 1 * C(3,2) * C(4,2) target-set choices, each giving a distinct edge set.
    support = attachment_supports(5, 2)
    assert len(support) == 18 and len(set(support)) == 18
    index = {es: i for i, es in enumerate(support)}
    trials = 5400
    counts = np.zeros(18)
    for seed in range(trials):
        g = generate(GenParams(5, 2, seed=seed))
        counts[index[frozenset(g.edges())]] += 1
    res = stats.chisquare(counts)
    assert res.pvalue > 1e-4


def test_generate_matches_exact_law_m1():
    # [DERIVED] with n=4, m=1 the process is a uniform recursive tree:
    # 1 * 2 * 3 = 6 equally likely labeled trees.
    support = attachment_supports(4, 1)
    assert len(support) == 6 and len(set(support)) == 6
    index = {es: i for i, es in enumerate(support)}
    counts = np.zeros(6)
    for seed in range(3000):
        g = generate(GenParams(4, 1, seed=seed))
        counts[index[frozenset(g.edges())]] += 1
    res = stats.chisquare(counts)
    assert res.pvalue > 1e-4


def test_attach_step_replays_generate():
    params = GenParams(40, 3, seed=21)
    full = generate(params)
    g = complete_graph(3)
    stream = Stream(params.seed)
    for _ in range(params.n - params.m):
        g = attach_step(g, params.m, stream)
    assert g == full


def test_attach_step_validation():
    with pytest.raises(ValueError):
        attach_step(complete_graph(2), 3, Stream(0))
    g2 = attach_step(complete_graph(2), 2, Stream(0))
    assert g2.n == 3 and g2.degree(3) == 2


def test_generate_prefixes_match_fresh_runs():
    params = GenParams(60, 2, seed=4)
    pres = generate_prefixes(params, [2, 10, 35, 60])
    assert pres[0] == complete_graph(2)
    for g, k in zip(pres, [2, 10, 35, 60]):
        assert g == generate(GenParams(k, 2, seed=4))
    with pytest.raises(ValueError):
        generate_prefixes(params, [10, 10])
    with pytest.raises(ValueError):
        generate_prefixes(params, [1, 10])


# -------------------------------------------------------- structure queries


def test_distance_against_bfs_oracle():
    g = generate(GenParams(80, 2, seed=2))
    h = to_nx(g)
    lengths = dict(nx.all_pairs_shortest_path_length(h))
    for u in [1, 7, 33, 80]:
        for v in range(1, 81):
            assert distance(g, u, v) == lengths[u].get(v, math.inf)
    d = distances_from(g, [5])
    for v in range(1, 81):
        expect = lengths[5].get(v, -1)
        assert d[v] == expect


def test_distance_disconnected():
    g = Graph(4, [(1, 2), (3, 4)])
    assert distance(g, 1, 3) == math.inf
    assert distance(g, 1, 2) == 1
    assert set_distance(g, [1], [3, 4]) == math.inf
    assert set_distance(g, [1, 3], [4]) == 1
    assert set_distance(g, [2], [2]) == 0


def test_set_distance_against_oracle():
    g = generate(GenParams(70, 2, seed=3))
    h = to_nx(g)
    lengths = dict(nx.all_pairs_shortest_path_length(h))
    sources = [3, 17]
    targets = [50, 61, 70]
    expect = min(lengths[s][t] for s in sources for t in targets)
    assert set_distance(g, sources, targets) == expect


def test_distances_from_cap():
    g = generate(GenParams(100, 2, seed=8))
    capped = distances_from(g, [1], cap=2)
    full = distances_from(g, [1])
    for v in g.vertices():
        if full[v] <= 2:
            assert capped[v] == full[v]
        else:
            assert capped[v] == -1


def canonical_cycle(vs: list) -> tuple:
    i = vs.index(min(vs))
    fwd = vs[i:] + vs[:i]
    rev = [fwd[0]] + fwd[1:][::-1]
    return tuple(min(fwd, rev))


def test_cycles_against_networkx_oracle():
    for seed in range(4):
        g = generate(GenParams(45, 2, seed=100 + seed))
        for a in (3, 4, 5, 6):
            expect = sorted(
                canonical_cycle(c)
                for c in nx.simple_cycles(to_nx(g), length_bound=a)
            )
            assert cycles_up_to(g, a) == expect


def test_cycles_min_excl():
    g = generate(GenParams(45, 2, seed=104))
    all_cycles = cycles_up_to(g, 5)
    outside = cycles_up_to(g, 5, min_excl=10)
    assert outside == [c for c in all_cycles if min(c) > 10]


def test_cycles_canonical_form():
    g = Graph(6, [(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 6), (6, 3)])
    assert cycles_up_to(g, 2) == []
    assert cycles_up_to(g, 3) == [(1, 2, 3)]
    assert cycles_up_to(g, 4) == [(1, 2, 3), (3, 4, 5, 6)]
    assert cycles_up_to(g, 5) == [(1, 2, 3), (3, 4, 5, 6)]


def test_ball_against_oracle():
    g = generate(GenParams(90, 2, seed=6))
    h = to_nx(g)
    for center, r in [(1, 0), (5, 1), (5, 2), (77, 3)]:
        b = ball(g, center, r)
        expect = nx.single_source_shortest_path_length(h, center, cutoff=r)
        assert set(b.orig) == set(expect)
        assert b.orig[0] == center and b.dist[0] == 0
        assert b.to_original(1) == center
        # new labels sorted by (distance, original label)
        key = [(expect[v], v) for v in b.orig]
        assert key == sorted(key)
        # induced edges preserved
        for i, j in combinations(range(1, b.graph.n + 1), 2):
            assert b.graph.adjacent(i, j) == g.adjacent(b.orig[i - 1], b.orig[j - 1])


def test_induced_subgraph():
    g = Graph(5, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])
    sub, orig = induced_subgraph(g, [2, 3, 5])
    assert orig == (2, 3, 5)
    assert sub.n == 3 and set(sub.edges()) == {(1, 2)}
    with pytest.raises(ValueError):
        induced_subgraph(g, [2, 2])
    with pytest.raises(ValueError):
        induced_subgraph(g, [0])


# ------------------------------------------------------------ validation/io


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph(3, [(1, 2), (2, 1)])
    with pytest.raises(ValueError):
        Graph(3, [(1, 4)])
    with pytest.raises(ValueError):
        Graph(3, [(0, 2)])
    g = Graph(3, [])
    assert g.num_edges == 0 and list(g.edges()) == []


def test_io_round_trip(tmp_path):
    g = generate(GenParams(30, 2, seed=12))
    path = tmp_path / "g.txt"
    write_graph(g, path)
    h = read_graph(path)
    assert h == g and h.m_hint == 2

    buf = io.StringIO()
    write_graph(g, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "30 2"
    assert graph_from_text(text) == g


def test_read_graph_errors():
    with pytest.raises(ValueError):
        graph_from_text("3\n1 2\n")
    with pytest.raises(ValueError):
        graph_from_text("3 0\n1 2 3\n")
    with pytest.raises(ValueError):
        graph_from_text("3 0\n1 1\n")


# ------------------------------------------------------------- property set


@st.composite
def edge_lists(draw):
    n = draw(st.integers(2, 12))
    raw = draw(
        st.lists(
            st.tuples(st.integers(1, n), st.integers(1, n)), max_size=30
        )
    )
    pairs = sorted({(min(u, v), max(u, v)) for u, v in raw if u != v})
    return n, pairs


@given(edge_lists())
@settings(max_examples=60, deadline=None)
def test_graph_invariants(case):
    n, pairs = case
    g = Graph(n, pairs)
    assert g.num_edges == len(pairs)
    assert list(g.edges()) == pairs
    assert int(g.degrees()[1:].sum() if n else 0) == 2 * len(pairs)
    for u, v in pairs:
        assert g.adjacent(u, v) and g.adjacent(v, u)
    assert Graph(n, g.edge_array()) == g
    for v in g.vertices():
        row = g.neighbors(v)
        assert list(row) == sorted(row)
        assert g.degree(v) == len(row)


@given(edge_lists(), st.integers(1, 12), st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_ball_is_distance_sublevel(case, center, radius):
    n, pairs = case
    center = 1 + (center - 1) % n
    g = Graph(n, pairs)
    b = ball(g, center, radius)
    d = distances_from(g, [center])
    inside = {v for v in g.vertices() if 0 <= d[v] <= radius}
    assert set(b.orig) == inside
    for i, dv in zip(b.orig, b.dist):
        assert d[i] == dv
