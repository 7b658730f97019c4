from itertools import combinations

import numpy as np
import pytest
from hypothesis import strategies as st

from chaincausal.graph import MixedGraph

V4 = ["1", "2", "3", "4"]


def latent_pair():
    return MixedGraph.digraph(["1", "2", "3", "4", "5"],
                              [("1", "3"), ("2", "4"), ("5", "3"), ("5", "4")])


def bow_pair():
    return MixedGraph(V4, [("1", "3"), ("2", "4")], [("3", "4")])


def five_dag():
    return MixedGraph.digraph(["1", "2", "3", "4", "5"],
                              [("1", "3"), ("1", "4"), ("2", "3"), ("2", "5"), ("3", "4"), ("4", "5")])


def bicycle(p):
    names = [str(i) for i in range(1, p + 1)]
    return MixedGraph(names, [], [(names[i], names[(i + 1) % p]) for i in range(p)])


def triangle():
    return MixedGraph(["1", "2", "3"], [], [("1", "2"), ("2", "3"), ("1", "3")])


def random_dag(rng, n, max_edges=None, p=0.4):
    names = [str(i) for i in range(1, n + 1)]
    perm = rng.permutation(n)
    pairs = [(names[perm[i]], names[perm[j]]) for i, j in combinations(range(n), 2)]
    edges = [e for e in pairs if rng.random() < p]
    if max_edges is not None and len(edges) > max_edges:
        keep = sorted(rng.choice(len(edges), size=max_edges, replace=False))
        edges = [edges[i] for i in keep]
    return MixedGraph.digraph(names, edges)


def random_bidirected(rng, n, p=0.45):
    names = [str(i) for i in range(1, n + 1)]
    return MixedGraph(names, [], [e for e in combinations(names, 2) if rng.random() < p])


def random_chain_graph(rng, n, p_dir=0.35, p_bi=0.5):
    """Blocks of consecutive vertices; B inside blocks, D from earlier blocks to later ones."""
    names = [str(i) for i in range(1, n + 1)]
    block, cuts = [], 0
    for i in range(n):
        if i and rng.random() < 0.45:
            cuts += 1
        block.append(cuts)
    directed, bidirected = [], []
    for i, j in combinations(range(n), 2):
        if block[i] == block[j]:
            if rng.random() < p_bi:
                bidirected.append((names[i], names[j]))
        elif rng.random() < p_dir:
            directed.append((names[i], names[j]))
    # shuffle declaration order so nothing relies on it being topological
    order = rng.permutation(n)
    return MixedGraph([names[k] for k in order], directed, bidirected)


def induced_cycles(g, min_len=4):
    """Brute force: vertex sets of size >= min_len inducing a cycle in (V, B)."""
    out = []
    for k in range(min_len, len(g) + 1):
        for S in combinations(g.vertices, k):
            deg = {v: sum(g.has_bidirected(v, w) for w in S if w != v) for v in S}
            if any(d != 2 for d in deg.values()):
                continue
            # connected 2-regular means a single cycle
            seen, stack = {S[0]}, [S[0]]
            while stack:
                w = stack.pop()
                for x in S:
                    if x not in seen and g.has_bidirected(w, x):
                        seen.add(x)
                        stack.append(x)
            if len(seen) == k:
                out.append(S)
    return out


@st.composite
def dags(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_dag(np.random.default_rng(seed), n)


@st.composite
def chain_graphs(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_chain_graph(np.random.default_rng(seed), n)


@st.composite
def bidirected_graphs(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_bidirected(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
