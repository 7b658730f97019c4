"""Mixed graphs, digraphs and the combinatorial algorithms run on them.

A :class:`MixedGraph` holds an ordered vertex list, directed edges ``u -> v``
and bidirected edges ``u <-> v``.  Digraphs are mixed graphs without
bidirected edges.  Vertex order is declaration order and every matrix in the
package is indexed by it.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

from .errors import InvalidGraph, NotAcyclic, NotChainGraph, UnknownVertex


def _pair(e) -> tuple[str, str]:
    u, v = e
    return (str(u), str(v))


@dataclass(frozen=True)
class MixedGraph:
    """A graph with directed and bidirected edges.

    Construction is lenient: self-loops, duplicates and references to
    undeclared vertices are kept so that :func:`validate` can report them.
    Algorithms call :meth:`require_valid` before trusting the structure.
    """

    vertices: tuple[str, ...]
    directed: tuple[tuple[str, str], ...] = ()
    bidirected: tuple[tuple[str, str], ...] = ()

    def __init__(self, vertices: Iterable, directed: Iterable = (), bidirected: Iterable = ()):
        verts = tuple(str(v) for v in vertices)
        pos = {}
        for i, v in enumerate(verts):
            pos.setdefault(v, i)
        bi = []
        for e in bidirected:
            u, v = _pair(e)
            # canonical orientation: lower declaration index first
            if pos.get(v, len(verts)) < pos.get(u, len(verts)):
                u, v = v, u
            bi.append((u, v))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "directed", tuple(_pair(e) for e in directed))
        object.__setattr__(self, "bidirected", tuple(bi))

    @classmethod
    def digraph(cls, vertices: Iterable, edges: Iterable) -> "MixedGraph":
        return cls(vertices, edges, ())

    # ------------------------------------------------------------------ lookup

    @cached_property
    def index(self) -> dict[str, int]:
        idx: dict[str, int] = {}
        for i, v in enumerate(self.vertices):
            idx.setdefault(v, i)
        return idx

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self.index

    def idx(self, v) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def sort(self, vs: Iterable[str]) -> tuple[str, ...]:
        """Return ``vs`` in declaration order (deduplicated)."""
        return tuple(sorted(set(vs), key=self.idx))

    @cached_property
    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(e for e in self.directed if e[0] != e[1])

    @cached_property
    def bidirected_set(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(e) for e in self.bidirected if e[0] != e[1])

    def _neighbors(self, pairs, forward: bool):
        out: dict[str, list[str]] = {v: [] for v in self.vertices}
        for a, b in pairs:
            if a == b or a not in self.index or b not in self.index:
                continue
            src, dst = (a, b) if forward else (b, a)
            if dst not in out[src]:
                out[src].append(dst)
        return {v: tuple(sorted(ns, key=self.index.__getitem__)) for v, ns in out.items()}

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        return self._neighbors(self.directed, True)

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        return self._neighbors(self.directed, False)

    @cached_property
    def siblings(self) -> dict[str, tuple[str, ...]]:
        both = list(self.bidirected) + [(b, a) for a, b in self.bidirected]
        return self._neighbors(both, True)

    def has_edge(self, u, v) -> bool:
        return (u, v) in self.edge_set

    def has_bidirected(self, u, v) -> bool:
        return frozenset((u, v)) in self.bidirected_set

    @property
    def is_digraph(self) -> bool:
        return not self.bidirected

    @cached_property
    def edges(self) -> tuple[tuple[str, str], ...]:
        """Distinct directed edges in declaration order."""
        seen = []
        for e in self.directed:
            if e[0] != e[1] and e not in seen:
                seen.append(e)
        return tuple(seen)

    @cached_property
    def bi_edges(self) -> tuple[tuple[str, str], ...]:
        """Distinct bidirected edges in canonical orientation."""
        seen = []
        for e in self.bidirected:
            if e[0] != e[1] and e not in seen:
                seen.append(e)
        return tuple(seen)

    def require_valid(self) -> "MixedGraph":
        rep = validate(self)
        if not rep.ok:
            raise InvalidGraph("; ".join(rep.problems()))
        return self

    def subgraph(self, keep: Iterable[str]) -> "MixedGraph":
        keep = set(keep)
        return MixedGraph(
            [v for v in self.vertices if v in keep],
            [e for e in self.edges if e[0] in keep and e[1] in keep],
            [e for e in self.bi_edges if e[0] in keep and e[1] in keep],
        )

    def __repr__(self):
        return (f"MixedGraph(vertices={list(self.vertices)}, directed={list(self.directed)}, "
                f"bidirected={list(self.bidirected)})")


class LatentDigraph(NamedTuple):
    """A digraph whose vertices split into observed ones and hidden ones.

    ``hidden`` maps each hidden label to the observed clique it stands for
    (empty tuple when the hidden vertex is not tied to a clique).
    """

    graph: MixedGraph
    hidden: dict

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(v for v in self.graph.vertices if v not in self.hidden)


# --------------------------------------------------------------------- checks


@dataclass
class ValidationReport:
    self_loops: list = field(default_factory=list)
    duplicate_vertices: list = field(default_factory=list)
    duplicate_edges: list = field(default_factory=list)
    unknown_vertices: list = field(default_factory=list)
    acyclic: bool = True
    simple: bool = True

    @property
    def ok(self) -> bool:
        return not (self.self_loops or self.duplicate_vertices
                    or self.duplicate_edges or self.unknown_vertices)

    def problems(self) -> list[str]:
        out = [f"self-loop at {v}" for v in self.self_loops]
        out += [f"duplicate vertex {v}" for v in self.duplicate_vertices]
        out += [f"duplicate edge {e}" for e in self.duplicate_edges]
        out += [f"unknown vertex {v}" for v in self.unknown_vertices]
        return out

    def to_dict(self) -> dict:
        return {
            "valid": self.ok,
            "acyclic": self.acyclic,
            "simple": self.simple,
            "self_loops": list(self.self_loops),
            "duplicate_vertices": list(self.duplicate_vertices),
            "duplicate_edges": [list(e) for e in self.duplicate_edges],
            "unknown_vertices": list(self.unknown_vertices),
        }


def validate(g: MixedGraph) -> ValidationReport:
    """Report structural problems; never raises."""
    rep = ValidationReport()
    seen_v = set()
    for v in g.vertices:
        if v in seen_v and v not in rep.duplicate_vertices:
            rep.duplicate_vertices.append(v)
        seen_v.add(v)
    for kind, edges in (("dir", g.directed), ("bi", g.bidirected)):
        seen = set()
        for u, v in edges:
            for w in (u, v):
                if w not in seen_v and w not in rep.unknown_vertices:
                    rep.unknown_vertices.append(w)
            if u == v:
                if u not in rep.self_loops:
                    rep.self_loops.append(u)
                continue
            key = (u, v) if kind == "dir" else frozenset((u, v))
            if key in seen:
                rep.duplicate_edges.append((kind, u, v))
            seen.add(key)
    rep.acyclic = is_acyclic(g)
    rep.simple = not any(frozenset(e) in g.bidirected_set for e in g.edge_set)
    return rep


def topological_order(g: MixedGraph) -> tuple[str, ...]:
    """Kahn's algorithm on the directed part, ties broken by declaration order."""
    indeg = {v: len(g.parents[v]) for v in g.vertices}
    heap = [g.index[v] for v in g.vertices if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = g.vertices[heapq.heappop(heap)]
        order.append(v)
        for c in g.children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, g.index[c])
    if len(order) != len(set(g.vertices)):
        raise NotAcyclic("directed part contains a cycle")
    return tuple(order)


def is_acyclic(g: MixedGraph) -> bool:
    try:
        topological_order(g)
    except NotAcyclic:
        return False
    return True


def require_acyclic(g: MixedGraph) -> None:
    if not is_acyclic(g):
        raise NotAcyclic("directed part contains a cycle")


def _components(g: MixedGraph) -> list[tuple[str, ...]]:
    comp_of: dict[str, int] = {}
    comps = []
    for v in g.vertices:
        if v in comp_of:
            continue
        members = [v]
        comp_of[v] = len(comps)
        queue = deque([v])
        while queue:
            w = queue.popleft()
            for s in g.siblings[w]:
                if s not in comp_of:
                    comp_of[s] = len(comps)
                    members.append(s)
                    queue.append(s)
        comps.append(g.sort(members))
    return comps


def is_chain_graph(g: MixedGraph) -> bool:
    """True iff no cycle in D u B traverses a directed edge along its orientation.

    Each chain component is contracted to a point; the graph is a chain graph
    iff no directed edge stays inside a component and the quotient digraph is
    acyclic.
    """
    comps = _components(g)
    comp_of = {v: i for i, c in enumerate(comps) for v in c}
    quotient = set()
    for u, v in g.edge_set:
        if u not in comp_of or v not in comp_of:
            continue
        cu, cv = comp_of[u], comp_of[v]
        if cu == cv:
            return False
        quotient.add((cu, cv))
    q = MixedGraph(range(len(comps)), quotient)
    return is_acyclic(q)


@dataclass(frozen=True)
class ChainComponentPartition:
    components: tuple[tuple[str, ...], ...]
    component_of: dict

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)


def chain_components(g: MixedGraph) -> ChainComponentPartition:
    if not is_chain_graph(g):
        raise NotChainGraph("graph has a semi-directed cycle")
    comps = tuple(_components(g))
    return ChainComponentPartition(comps, {v: i for i, c in enumerate(comps) for v in c})


def ancestors(g: MixedGraph, S: Iterable[str], forbidden: Iterable[str] = ()) -> frozenset[str]:
    """Vertices with a directed path into ``S`` that never touches ``forbidden``.

    Trivial paths count, so ``S`` itself is part of the result.  With
    ``forbidden=A`` this is the set of ancestors in the subgraph induced by
    the complement of ``A``.
    """
    S = set(S)
    forbidden = set(forbidden)
    for v in S | forbidden:
        g.idx(v)
    if S & forbidden:
        raise ValueError("S and forbidden must be disjoint")
    seen = set(S)
    queue = deque(S)
    while queue:
        w = queue.popleft()
        for p in g.parents[w]:
            if p not in seen and p not in forbidden:
                seen.add(p)
                queue.append(p)
    return frozenset(seen)


def descendants(g: MixedGraph, S: Iterable[str]) -> frozenset[str]:
    seen = set(S)
    queue = deque(seen)
    while queue:
        w = queue.popleft()
        for c in g.children[w]:
            if c not in seen:
                seen.add(c)
                queue.append(c)
    return frozenset(seen)


# -------------------------------------------------------------------- cliques


def _maximal_cliques(adj: dict[str, set[str]], order: dict[str, int]):
    # Bron-Kerbosch with pivoting
    out = []

    def expand(r, p, x):
        if not p and not x:
            out.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot], key=order.__getitem__):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(adj), set())
    return out


def _bi_adjacency(g: MixedGraph) -> dict[str, set[str]]:
    return {v: set(g.siblings[v]) for v in g.vertices}


def bidirected_cliques(g: MixedGraph, min_size: int = 2, maximal_only: bool = False) -> list[tuple[str, ...]]:
    """All cliques of the bidirected part with at least ``min_size`` vertices.

    Ordered by size, then by declaration order of members.
    """
    maximal = _maximal_cliques(_bi_adjacency(g), g.index)
    found = set()
    for c in maximal:
        if maximal_only:
            if len(c) >= min_size:
                found.add(c)
            continue
        for k in range(max(min_size, 1), len(c) + 1):
            for sub in combinations(c, k):
                found.add(frozenset(sub))
    cliques = [g.sort(c) for c in found]
    cliques.sort(key=lambda c: (len(c), [g.index[v] for v in c]))
    return cliques


# ------------------------------------------------------------ decomposability


@dataclass(frozen=True)
class DecomposabilityReport:
    decomposable: bool
    certificate: tuple[str, ...] | None = None
    elimination_ordering: tuple[str, ...] | None = None

    def __bool__(self):
        return self.decomposable


def _mcs_order(adj: dict[str, set[str]], vertices: Sequence[str]) -> list[str]:
    weight = {v: 0 for v in vertices}
    visited: list[str] = []
    remaining = list(vertices)
    while remaining:
        best = max(remaining, key=lambda v: weight[v])  # first max wins: declaration order
        remaining.remove(best)
        visited.append(best)
        for w in adj[best]:
            if w in weight and w not in visited:
                weight[w] += 1
    return visited


def _shortest_path(adj, a, b, blocked, order):
    prev = {a: None}
    queue = deque([a])
    while queue:
        w = queue.popleft()
        if w == b:
            path = [b]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for x in sorted(adj[w], key=order.__getitem__):
            if x not in prev and x not in blocked:
                prev[x] = w
                queue.append(x)
    return None


def _chordless_cycle_through(adj, v, a, b, order):
    blocked = (adj[v] | {v}) - {a, b}
    path = _shortest_path(adj, a, b, blocked, order)
    if path is None:
        return None
    return [v] + path


def _normalize_cycle(cycle: list[str], order: dict[str, int]) -> tuple[str, ...]:
    i = min(range(len(cycle)), key=lambda k: order[cycle[k]])
    cyc = cycle[i:] + cycle[:i]
    if order[cyc[-1]] < order[cyc[1]]:
        cyc = [cyc[0]] + cyc[1:][::-1]
    return tuple(cyc)


def is_decomposable(g: MixedGraph) -> DecomposabilityReport:
    """Chordality of the bidirected part via maximum cardinality search.

    On success the report carries a perfect elimination ordering; on failure a
    chordless cycle of length at least four, rotated to start at its
    earliest-declared vertex.
    """
    adj = _bi_adjacency(g)
    order = _mcs_order(adj, g.vertices)
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        earlier = sorted((w for w in adj[v] if pos[w] < pos[v]), key=pos.__getitem__)
        for a, b in combinations(earlier, 2):
            if b not in adj[a]:
                cyc = _chordless_cycle_through(adj, v, a, b, g.index)
                if cyc is None:
                    cyc = _find_any_chordless_cycle(adj, g)
                return DecomposabilityReport(False, certificate=_normalize_cycle(cyc, g.index))
    return DecomposabilityReport(True, elimination_ordering=tuple(reversed(order)))


def _find_any_chordless_cycle(adj, g):
    for v in g.vertices:
        for a, b in combinations(sorted(adj[v], key=g.index.__getitem__), 2):
            if b in adj[a]:
                continue
            cyc = _chordless_cycle_through(adj, v, a, b, g.index)
            if cyc is not None:
                return cyc
    raise AssertionError("MCS reported a violation but no chordless cycle exists")


def is_chordless_cycle(g: MixedGraph, cycle: Sequence[str]) -> bool:
    """Check that ``cycle`` is an induced cycle of the bidirected part."""
    p = len(cycle)
    if p < 3 or len(set(cycle)) != p:
        return False
    for i, j in combinations(range(p), 2):
        adjacent = g.has_bidirected(cycle[i], cycle[j])
        consecutive = (j - i) in (1, p - 1)
        if adjacent != consecutive:
            return False
    return True


# --------------------------------------------------------- hidden-node graphs


def _hidden_label(members: Sequence[str], taken: set[str]) -> str:
    label = "h_" + "_".join(members)
    while label in taken:
        label += "'"
    return label


def _with_hidden(g: MixedGraph, groups: Sequence[tuple[str, ...]]) -> LatentDigraph:
    taken = set(g.vertices)
    hidden = {}
    edges = list(g.edges)
    for members in groups:
        h = _hidden_label(members, taken)
        taken.add(h)
        hidden[h] = tuple(members)
        edges.extend((h, v) for v in members)
    d = MixedGraph(list(g.vertices) + list(hidden), edges, ())
    return LatentDigraph(d, hidden)


def clique_digraph(g: MixedGraph, maximal_only: bool = False) -> LatentDigraph:
    """Add one hidden parent per bidirected clique of size >= 2 and drop B.

    ``maximal_only`` keeps only maximal cliques.  That smaller graph is not
    guaranteed to reproduce the mixed graph model (a one-factor model on a
    triangle misses sign patterns), so the full construction is the default.
    """
    require_acyclic(g)
    return _with_hidden(g, bidirected_cliques(g, 2, maximal_only=maximal_only))


def canonical_dag(g: MixedGraph) -> LatentDigraph:
    """Replace every ``u <-> v`` by ``u <- h -> v`` (bidirected subdivision)."""
    require_acyclic(g)
    return _with_hidden(g, [g.sort(e) for e in g.bi_edges])
