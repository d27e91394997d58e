"""Trimming, canonical codes, triviality, unicyclic decomposition."""

import io
from functools import lru_cache
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uag import Graph
from uag.canonical import (
    LEAF_CODE,
    RootedTree,
    RootedUnicyclic,
    a_isomorphic,
    a_trivial,
    canon_code,
    is_pendant,
    isomorphic,
    perfect_code,
    perfect_tree,
    read_tree,
    subtree,
    tree_from_graph,
    trim,
    trim_unicyclic,
    unicyclic_a_isomorphic,
    unicyclic_a_trivial,
    unicyclic_code,
    write_tree,
)

# ------------------------------------------------- independent tree oracle
#
# Trees as nested tuples: a tree is the sorted tuple of its child trees.
# This normal form, the naive recursive trim, and the backtracking
# isomorphism matcher below are written without reference to the module
# under test.


def to_nested(t: RootedTree, v: int = 1):
    return tuple(sorted(to_nested(t, w) for w in t.children(v)))


def from_nested(shape) -> RootedTree:
    parent = [0]

    def build(node, my_label):
        for child in node:
            parent.append(my_label)
            build(child, len(parent))

    build(shape, 1)
    return RootedTree(parent)


def trim_nested(shape, a):
    kids = sorted(trim_nested(k, a) for k in shape)
    out = []
    run_start = 0
    for i, k in enumerate(kids):
        if kids[run_start] != k:
            run_start = i
        if i - run_start < a:
            out.append(k)
    return tuple(out)


def iso_brute(t1: RootedTree, t2: RootedTree, v1: int = 1, v2: int = 1) -> bool:
    k1, k2 = t1.children(v1), t2.children(v2)
    if len(k1) != len(k2):
        return False
    return any(
        all(iso_brute(t1, t2, c1, c2) for c1, c2 in zip(k1, perm))
        for perm in permutations(k2)
    )


@lru_cache(maxsize=None)
def forests(budget: int):
    """All multisets (sorted tuples) of nested trees totaling ``budget``."""
    if budget == 0:
        return frozenset({()})
    out = set()
    for j in range(1, budget + 1):
        for t in all_shapes(j):
            for f in forests(budget - j):
                out.add(tuple(sorted(f + (t,))))
    return frozenset(out)


@lru_cache(maxsize=None)
def all_shapes(n: int):
    """All rooted trees on n vertices, as nested tuples."""
    return frozenset(forests(n - 1))


def test_tree_enumeration_counts():
    # [DERIVED] number of rooted trees on n vertices from the independent
    # enumerator; the sequence 1 1 2 4 9 20 48 115 286 is a frozen oracle.
    assert [len(all_shapes(n)) for n in range(1, 10)] == [
        1,
        1,
        2,
        4,
        9,
        20,
        48,
        115,
        286,
    ]


# ------------------------------------------------------------ construction


def star(k: int) -> RootedTree:
    return RootedTree([0] + [1] * k)


def path_tree(edges: int) -> RootedTree:
    return RootedTree([0] + list(range(1, edges + 1)))


def test_rooted_tree_validation():
    with pytest.raises(ValueError):
        RootedTree([])
    with pytest.raises(ValueError):
        RootedTree([1, 1])  # vertex 1 must have parent 0
    with pytest.raises(ValueError):
        RootedTree([0, 3])  # parent out of range
    with pytest.raises(ValueError):
        RootedTree([0, 2])  # 2 is its own ancestor
    t = RootedTree([0, 1, 1, 2])
    assert t.n == 4 and t.root == 1
    assert t.children(1) == (2, 3) and t.children(2) == (4,)
    assert t.depth() == 2


def test_subtree():
    t = perfect_tree(2, 2)
    assert subtree(t, 1) == t
    leaf = subtree(t, t.n)
    assert leaf.n == 1 and leaf.depth() == 0
    child = subtree(t, 2)
    assert isomorphic(child, perfect_tree(2, 1))
    with pytest.raises(ValueError):
        subtree(t, 0)


def test_tree_from_graph():
    g = Graph(4, [(1, 2), (2, 3), (2, 4)])
    t = tree_from_graph(g, root=1)
    assert t.depth() == 2 and t.children(1) == (2,)
    with pytest.raises(ValueError):
        tree_from_graph(Graph(3, [(1, 2), (2, 3), (3, 1)]))
    with pytest.raises(ValueError):
        tree_from_graph(Graph(4, [(1, 2), (3, 4)]))


# ------------------------------------------------------------------- codes


def test_leaf_code():
    assert canon_code(RootedTree([0])) == LEAF_CODE


def test_codes_depth_sensitive():
    assert canon_code(star(2)) != canon_code(path_tree(2))
    assert canon_code(perfect_tree(2, 2)) != canon_code(perfect_tree(2, 3))


def test_code_ignores_labeling():
    # same shape, two labelings
    t1 = RootedTree([0, 1, 1, 2, 2])
    t2 = RootedTree([0, 1, 1, 3, 3])
    assert canon_code(t1) == canon_code(t2)
    assert isomorphic(t1, t2)


def test_perfect_code_matches_tree():
    for a in (1, 2, 3):
        for d in (0, 1, 2, 3):
            assert canon_code(perfect_tree(a, d)) == perfect_code(a, d)
            assert canon_code(perfect_tree(a, d), a) == perfect_code(a, d, cap=a)
    # a cap below the branching really caps
    assert perfect_code(3, 2, cap=2) == canon_code(perfect_tree(3, 2), 2)
    assert perfect_code(3, 2, cap=2) != perfect_code(3, 2)


# -------------------------------------------------------------------- trim


def test_trim_examples_from_shapes():
    # star with 5 leaves, cap 3 -> star with 3 leaves
    assert to_nested(trim(star(5), 3)) == to_nested(star(3))
    # root with 4 leaf children and one length-2 path child, cap 2:
    # the leaf class shrinks to 2, the path child is its own class
    t = RootedTree([0, 1, 1, 1, 1, 1, 6])
    expect = RootedTree([0, 1, 1, 1, 4])
    assert to_nested(trim(t, 2)) == to_nested(expect)
    # perfect trees never trim
    p = perfect_tree(3, 2)
    assert trim(p, 3) == p


def test_trim_keeps_lowest_labels_and_relabels_bfs():
    t = star(5)
    assert trim(t, 3).parent == (0, 1, 1, 1)


def test_trim_idempotent():
    for shape in list(all_shapes(7))[::5]:
        t = from_nested(shape)
        for a in (1, 2, 3):
            once = trim(t, a)
            assert trim(once, a) == once


def test_trim_matches_naive_oracle_small():
    for n in range(1, 8):
        for shape in all_shapes(n):
            t = from_nested(shape)
            for a in (1, 2, 3):
                assert to_nested(trim(t, a)) == trim_nested(shape, a)


def test_fused_code_equals_literal_pipeline():
    for n in range(1, 8):
        for shape in all_shapes(n):
            t = from_nested(shape)
            for a in (1, 2):
                assert canon_code(t, a) == canon_code(trim(t, a))


# ---------------------------------------------------------- a-equivalence


def test_a_isomorphic_examples():
    assert a_isomorphic(star(4), star(7), 3)
    assert not a_isomorphic(star(2), star(3), 3)
    t = from_nested(next(iter(all_shapes(6))))
    assert a_isomorphic(t, t, 2)


def test_a_isomorphic_matches_brute_force():
    shapes = sorted(set().union(*(all_shapes(n) for n in range(1, 7))))
    trees = [from_nested(s) for s in shapes]
    for a in (1, 2):
        for i, t1 in enumerate(trees):
            for t2 in trees[i:]:
                got = a_isomorphic(t1, t2, a)
                expect = iso_brute(trim(t1, a), trim(t2, a))
                assert got == expect


def test_exact_isomorphism_implies_a_isomorphism():
    for shape in list(all_shapes(7))[::7]:
        t1 = from_nested(shape)
        t2 = from_nested(shape)
        for a in (1, 2, 3):
            assert a_isomorphic(t1, t2, a)


@st.composite
def random_trees(draw):
    n = draw(st.integers(1, 40))
    parent = [0]
    for v in range(2, n + 1):
        parent.append(draw(st.integers(1, v - 1)))
    return RootedTree(parent)


@given(random_trees(), st.integers(1, 4))
@settings(max_examples=80, deadline=None)
def test_trim_code_agreement_random(t, a):
    assert canon_code(t, a) == canon_code(trim(t, a))
    assert trim(trim(t, a), a) == trim(t, a)
    # trimming can only shrink, and never below one child per class
    assert trim(t, a).n <= t.n
    assert trim(t, a).depth() == t.depth()


@given(random_trees(), random_trees(), random_trees(), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_a_isomorphism_is_equivalence(t1, t2, t3, a):
    assert a_isomorphic(t1, t1, a)
    assert a_isomorphic(t1, t2, a) == a_isomorphic(t2, t1, a)
    if a_isomorphic(t1, t2, a) and a_isomorphic(t2, t3, a):
        assert a_isomorphic(t1, t3, a)


# --------------------------------------------------------------- triviality


def test_a_trivial():
    assert a_trivial(perfect_tree(3, 2), 3)
    assert a_trivial(star(6), 3)  # K_{1,a+3} trims to K_{1,a}
    assert not a_trivial(path_tree(2), 2)
    assert a_trivial(RootedTree([0]), 5)  # depth 0
    # branching m-1 inside but root degree m: still (m-1)-trivial
    g = Graph(10, [(1, 2), (1, 3), (1, 4), (2, 5), (2, 6), (3, 7), (3, 8), (4, 9), (4, 10)])
    assert a_trivial(tree_from_graph(g), 2)


# ------------------------------------------------------------------ pendant


def test_is_pendant():
    g = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)])
    assert is_pendant(g, range(1, 7))
    assert is_pendant(g, [1, 2])  # 2 has inside-degree 1
    # only vertices of inside-degree >= 2 are constrained, and 3 stays inside
    assert is_pendant(g, [2, 3, 4])
    assert is_pendant(g, [1, 2, 3])
    # a triangle vertex with an extra outside edge breaks pendant-ness
    tri = Graph(4, [(1, 2), (2, 3), (3, 1), (3, 4)])
    assert not is_pendant(tri, [1, 2, 3])
    assert is_pendant(tri, [1, 2, 3, 4])
    # star center with inside-degree 2 and leaves left outside
    s = Graph(5, [(1, 2), (1, 3), (1, 4), (1, 5)])
    assert not is_pendant(s, [1, 2, 3])
    assert is_pendant(s, [2, 1])  # inside-degree 1: outside edges allowed


# ---------------------------------------------------------------- unicyclic


def lollipop(cycle_len: int, tail: int) -> Graph:
    """Cycle plus a path of ``tail`` edges hanging from cycle vertex 1;
    the far end of the tail is vertex cycle_len + tail (root anywhere)."""
    edges = [(i, i + 1) for i in range(1, cycle_len)] + [(1, cycle_len)]
    prev = 1
    for i in range(tail):
        nxt = cycle_len + 1 + i
        edges.append((prev, nxt))
        prev = nxt
    return Graph(cycle_len + tail, edges)


def test_unicyclic_validation():
    with pytest.raises(ValueError):
        RootedUnicyclic(Graph(3, [(1, 2), (2, 3)]))  # tree
    with pytest.raises(ValueError):
        RootedUnicyclic(
            Graph(6, [(1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 4)])
        )  # two components
    c = RootedUnicyclic(lollipop(4, 0))
    assert c.cycle() == (1, 2, 3, 4)
    assert c.root_path() == (1,)


def test_unicyclic_decomposition():
    g = lollipop(3, 2)  # cycle 1-2-3, tail 1-4-5
    c = RootedUnicyclic(g, root=5)
    assert c.cycle() == (1, 2, 3)
    assert c.root_path() == (5, 4, 1)
    assert c.depth() == 3  # 5 -> 4 -> 1 -> 2
    assert c.spine() == (5, 4, 1, 2, 3)
    assert c.hanging_tree(5).n == 1
    assert c.hanging_tree(2).n == 1
    with pytest.raises(ValueError):
        c.hanging_tree(99)


def test_unicyclic_hanging_trees():
    # cycle 1-2-3 with a 2-leaf star at 2 and a leaf at 3
    g = Graph(6, [(1, 2), (2, 3), (3, 1), (2, 4), (4, 5), (3, 6)])
    c = RootedUnicyclic(g, root=1)
    assert to_nested(c.hanging_tree(2)) == (((),),)
    assert to_nested(c.hanging_tree(3)) == ((),)
    assert to_nested(c.hanging_tree(1)) == ()


def test_unicyclic_code_reflection():
    # a leaf at distance 1 clockwise vs counterclockwise: mirror images
    g1 = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (2, 6)])
    g2 = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (5, 6)])
    c1 = RootedUnicyclic(g1, root=1)
    c2 = RootedUnicyclic(g2, root=1)
    assert unicyclic_code(c1) == unicyclic_code(c2)
    # but a leaf two steps away is a different class
    g3 = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (3, 6)])
    assert unicyclic_code(RootedUnicyclic(g3, root=1)) != unicyclic_code(c1)
    assert unicyclic_a_isomorphic(c1, c2, 2)


def test_unicyclic_codes_separate_shapes():
    a = RootedUnicyclic(lollipop(3, 1), root=4)
    b = RootedUnicyclic(lollipop(4, 1), root=5)
    assert unicyclic_code(a) != unicyclic_code(b)  # cycle length differs
    c_near = RootedUnicyclic(lollipop(3, 2), root=4)
    assert unicyclic_code(a) != unicyclic_code(c_near)  # root distance differs


def test_trim_unicyclic_example():
    # spec-style case: triangle with five leaves at one cycle vertex, cap 3
    edges = [(1, 2), (2, 3), (3, 1)] + [(2, 3 + i) for i in range(1, 6)]
    c = RootedUnicyclic(Graph(8, edges), root=1)
    out = trim_unicyclic(c, 3)
    assert out.n == 6  # 3 cycle vertices + 3 surviving leaves
    expect = [(1, 2), (2, 3), (3, 1)] + [(2, 3 + i) for i in range(1, 4)]
    assert unicyclic_code(out) == unicyclic_code(
        RootedUnicyclic(Graph(6, expect), root=1)
    )


def test_trim_unicyclic_matches_capped_code():
    import random as pyrandom

    rng = pyrandom.Random(5)
    for _ in range(40):
        n = rng.randint(3, 18)
        parent = [0] + [rng.randint(1, v - 1) for v in range(2, n + 1)]
        t = RootedTree(parent)
        edges = [(v, parent[v - 1]) for v in range(2, n + 1)]
        # one extra edge closes exactly one cycle
        candidates = [
            (u, v)
            for u in range(1, n + 1)
            for v in range(u + 1, n + 1)
            if (u, v) not in {(min(e), max(e)) for e in edges}
        ]
        extra = rng.choice(candidates)
        g = Graph(n, edges + [extra])
        c = RootedUnicyclic(g, root=rng.randint(1, n))
        for a in (1, 2, 3):
            assert unicyclic_code(trim_unicyclic(c, a)) == unicyclic_code(c, a)


def test_unicyclic_trivial():
    # triangle, root on the cycle, depth 2: the root hangs a perfect binary
    # tree of depth 2, its cycle neighbors hang perfect binary trees of depth 1
    edges = [(1, 2), (2, 3), (3, 1)]
    edges += [(1, 4), (1, 5), (4, 6), (4, 7), (5, 8), (5, 9)]  # T_root
    edges += [(2, 10), (2, 11), (3, 12), (3, 13)]
    g = Graph(13, edges)
    c = RootedUnicyclic(g, root=1)
    assert unicyclic_a_trivial(c, 2)
    # drop one leaf of a cycle-vertex tree: no longer trivial
    g_bad = Graph(12, [e for e in edges if e != (3, 13)])
    assert not unicyclic_a_trivial(RootedUnicyclic(g_bad, root=1), 2)
    # bare cycles are never trivial: the root must hang a tree of full depth
    assert not unicyclic_a_trivial(RootedUnicyclic(lollipop(5, 0)), 2)


def test_unicyclic_trivial_with_extra_siblings():
    # root on a triangle with three identical depth-1 trees where cap is 2:
    # trimming brings the class down to the perfect shape
    edges = [(1, 2), (2, 3), (3, 1)]
    edges += [(1, 4), (1, 5), (1, 6), (4, 7), (4, 8), (4, 9), (5, 10), (5, 11), (6, 12)]
    # T_root: children 4 (3 leaves), 5 (2 leaves), 6 (1 leaf) -- depths right
    # but classes unequal, so not trivial
    c = RootedUnicyclic(Graph(12, edges), root=1)
    assert not unicyclic_a_trivial(c, 2)


# ---------------------------------------------------------------------- io


def test_tree_io_round_trip(tmp_path):
    t = perfect_tree(2, 3)
    path = tmp_path / "t.txt"
    write_tree(t, path)
    assert read_tree(path) == t

    buf = io.StringIO()
    write_tree(star(3), buf)
    assert buf.getvalue() == "4\n2 1\n3 1\n4 1\n"
    assert read_tree(io.StringIO(buf.getvalue())) == star(3)


def test_tree_io_errors():
    with pytest.raises(ValueError):
        read_tree(io.StringIO("3\n2 1\n2 1\n"))
    with pytest.raises(ValueError):
        read_tree(io.StringIO("3\n2 1\n9 1\n"))
    with pytest.raises(ValueError):
        read_tree(io.StringIO("2\n2 1 7\n"))
