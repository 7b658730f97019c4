from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaincausal.errors import BadQuery, NotADigraph, UnknownVertex
from chaincausal.graph import MixedGraph, ancestors, canonical_dag
from chaincausal.separation import (BACKWARD, BIDIRECTED, FORWARD, Walk, d_connected,
                                    d_separated, is_d_connecting, negation_edge_set, tops)

from conftest import bicycle, chain_graphs, dags, bow_pair, five_dag, random_dag


def _nx(g):
    d = nx.DiGraph(list(g.edges))
    d.add_nodes_from(g.vertices)
    return d


def test_walk_parse_roundtrip():
    w = Walk.parse("2 -> 3 <- 1 -> 4")
    assert w.vertices == ("2", "3", "1", "4")
    assert w.marks == (FORWARD, BACKWARD, FORWARD)
    assert w.colliders() == (True, False)
    assert str(w) == "2 -> 3 <- 1 -> 4"
    assert Walk.parse("1 <-> 2").marks == (BIDIRECTED,)


def test_example_c_walk_is_d_connecting():
    g = five_dag()
    assert is_d_connecting(g, Walk.parse("2 -> 3 <- 1 -> 4"), {"3", "5"})
    assert not is_d_connecting(g, Walk.parse("2 -> 3 <- 1 -> 4"), {"5"})


def test_d_connected_five_dag():
    g = five_dag()
    ok, walk = d_connected(g, "2", "4", {"3", "5"})
    assert ok
    assert is_d_connecting(g, walk, {"3", "5"})
    assert walk.source == "2" and walk.target == "4"


def test_marginal_independence_in_bow_pair():
    g = bow_pair()
    assert d_separated(g, "1", "2")
    assert d_separated(g, "1", "4")
    assert not d_separated(g, "1", "4", {"3"})  # 1 -> 3 <-> 4 opens at the collider


def test_bad_queries():
    g = five_dag()
    with pytest.raises(BadQuery):
        d_connected(g, "1", "1")
    with pytest.raises(BadQuery):
        d_connected(g, "1", "2", {"1"})
    with pytest.raises(UnknownVertex):
        d_connected(g, "1", "9")


@given(dags(7), st.data())
@settings(max_examples=150, deadline=None)
def test_d_separation_against_networkx(g, data):
    if len(g) < 2:
        return
    u, v = data.draw(st.lists(st.sampled_from(g.vertices), min_size=2, max_size=2, unique=True))
    rest = [w for w in g.vertices if w not in (u, v)]
    A = set(data.draw(st.lists(st.sampled_from(rest), max_size=4))) if rest else set()
    assert d_separated(g, u, v, A) == nx.is_d_separator(_nx(g), {u}, {v}, A)


@given(chain_graphs(6), st.data())
@settings(max_examples=120, deadline=None)
def test_m_separation_via_canonical_dag(g, data):
    if len(g) < 2:
        return
    u, v = data.draw(st.lists(st.sampled_from(g.vertices), min_size=2, max_size=2, unique=True))
    rest = [w for w in g.vertices if w not in (u, v)]
    A = set(data.draw(st.lists(st.sampled_from(rest), max_size=3))) if rest else set()
    d = canonical_dag(g).graph
    assert d_separated(g, u, v, A) == nx.is_d_separator(_nx(d), {u}, {v}, A)


def _naive_connected(g, u, v, A, max_len):
    """Enumerate every walk of length <= max_len and test the definition."""
    steps = {w: [(c, FORWARD) for c in g.children[w]] + [(p, BACKWARD) for p in g.parents[w]]
             + [(s, BIDIRECTED) for s in g.siblings[w]] for w in g.vertices}

    def grow(verts, marks):
        if len(marks) and verts[-1] == v and is_d_connecting(g, Walk(tuple(verts), tuple(marks)), A):
            return True
        if len(marks) == max_len:
            return False
        for x, m in steps[verts[-1]]:
            if grow(verts + [x], marks + [m]):
                return True
        return False

    return grow([u], [])


def test_d_connection_against_walk_enumeration(rng):
    for _ in range(12):
        n = int(rng.integers(3, 5))
        g = random_dag(rng, n, p=0.5)
        g = MixedGraph(g.vertices, g.edges,
                       [e for e in combinations(g.vertices, 2) if rng.random() < 0.2 and not g.has_edge(*e)
                        and not g.has_edge(e[1], e[0])])
        for u, v in combinations(g.vertices, 2):
            rest = [w for w in g.vertices if w not in (u, v)]
            for k in range(len(rest) + 1):
                for A in combinations(rest, k):
                    ok, walk = d_connected(g, u, v, A)
                    # a shortest walk visits each (vertex, arrowhead) state at most once
                    assert ok == _naive_connected(g, u, v, set(A), 2 * n + 1)
                    if ok:
                        assert is_d_connecting(g, walk, A)


def test_tops_examples_c_and_d():
    g = five_dag()
    assert tops(g, "2", "4", {"3", "5"}) == {"2"}
    assert tops(g, "2", "4", {"5"}) == {"2"}


def test_tops_requires_digraph():
    with pytest.raises(NotADigraph):
        tops(bow_pair(), "1", "2")


def test_negation_edges_four_cycle():
    d = canonical_dag(bicycle(4)).graph
    assert tops(d, "1", "2", set()) == {"h_1_2"}
    assert negation_edge_set(d, set(), "1", "2") == (("h_1_2", "1"),)


def _walk_tops(g, u, v, A, max_len):
    """Top nodes read off all d-connecting walks up to a length bound."""
    stop = set(A) | {v}
    found = set()
    steps = {w: [(c, FORWARD) for c in g.children[w]] + [(p, BACKWARD) for p in g.parents[w]]
             for w in g.vertices}

    def initial_top(walk):
        # initial trek ends at the first vertex in A or {v} after the start
        verts, marks = walk.vertices, walk.marks
        for i in range(1, len(verts)):
            if verts[i] in stop:
                seg = marks[:i]
                k = sum(1 for m in seg if m == BACKWARD)
                return verts[k]
        return None

    def grow(verts, marks):
        if len(marks) and verts[-1] == v:
            w = Walk(tuple(verts), tuple(marks))
            if is_d_connecting(g, w, A):
                found.add(initial_top(w))
        if len(marks) == max_len:
            return
        for x, m in steps[verts[-1]]:
            grow(verts + [x], marks + [m])

    grow([u], [])
    return found


def test_tops_against_walk_enumeration(rng):
    for _ in range(10):
        g = random_dag(rng, int(rng.integers(3, 6)), p=0.5)
        for u, v in combinations(g.vertices, 2):
            rest = [w for w in g.vertices if w not in (u, v)]
            for k in range(min(len(rest), 2) + 1):
                for A in combinations(rest, k):
                    if not d_connected(g, u, v, A)[0]:
                        continue
                    assert tops(g, u, v, A) == _walk_tops(g, u, v, A, 2 * len(g) + 1)


def test_negation_edges_are_edges_from_tops(rng):
    for _ in range(20):
        g = random_dag(rng, 6, p=0.4)
        u, v = g.vertices[0], g.vertices[1]
        A = {g.vertices[2]}
        if not d_connected(g, u, v, A)[0]:
            continue
        T = tops(g, u, v, A)
        anc = ancestors(g, {u}, forbidden=A)
        for a, b in negation_edge_set(g, A, u, v):
            assert a in T and b in anc and b not in T


def test_example_d_walks():
    g = five_dag()
    assert not is_d_connecting(g, Walk.parse("2 -> 3 <- 1 -> 4"), {"5"})
    assert is_d_connecting(g, Walk.parse("2 -> 3 -> 4 -> 5 <- 4"), {"5"})
    assert d_connected(g, "2", "4", {"5"})[0]


def test_isolated_vertices_never_connected():
    g = MixedGraph(["a", "b", "c"])
    assert d_separated(g, "a", "b")
    assert d_separated(g, "a", "b", {"c"})


def test_negation_edges_triangle_clique_digraph():
    from chaincausal.graph import clique_digraph
    from conftest import triangle
    d = clique_digraph(triangle()).graph
    T = tops(d, "1", "2", set())
    assert T == {"h_1_2", "h_1_2_3"}
    anc = ancestors(d, {"1"}) - T
    expect = {(a, b) for a, b in d.edges if a in T and b in anc}
    assert set(negation_edge_set(d, set(), "1", "2")) == expect == {("h_1_2", "1"), ("h_1_2_3", "1")}
