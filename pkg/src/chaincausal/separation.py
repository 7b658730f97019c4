"""Walk-based connection queries on digraphs and mixed graphs.

d-connection is decided by breadth-first search over states
``(vertex, arrived-with-arrowhead)``.  Walks may repeat vertices and edges,
and this state space captures that exactly: whether an interior vertex is a
collider depends only on the mark of the edge used to enter it and the mark
of the edge used to leave it.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import BadQuery, NotADigraph
from .graph import MixedGraph, ancestors

# marks describe the edge between vertices[i] and vertices[i+1]
FORWARD, BACKWARD, BIDIRECTED = "->", "<-", "<->"


def _head_at_end(mark: str) -> bool:
    return mark in (FORWARD, BIDIRECTED)


def _head_at_start(mark: str) -> bool:
    return mark in (BACKWARD, BIDIRECTED)


@dataclass(frozen=True)
class Walk:
    vertices: tuple[str, ...]
    marks: tuple[str, ...]

    def __post_init__(self):
        if len(self.marks) != max(len(self.vertices) - 1, 0):
            raise ValueError("a walk needs exactly one mark per step")

    @classmethod
    def parse(cls, text: str) -> "Walk":
        """Parse ``"2 -> 3 <- 1 <-> 4"``."""
        tokens = re.findall(r"<->|->|<-|[^\s<>-]+", text)
        return cls(tuple(tokens[0::2]), tuple(tokens[1::2]))

    @property
    def source(self):
        return self.vertices[0]

    @property
    def target(self):
        return self.vertices[-1]

    def colliders(self) -> tuple[bool, ...]:
        """Collider flag for each interior vertex."""
        return tuple(
            _head_at_end(self.marks[i - 1]) and _head_at_start(self.marks[i])
            for i in range(1, len(self.vertices) - 1)
        )

    def is_path(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    def __str__(self):
        out = [self.vertices[0]]
        for m, v in zip(self.marks, self.vertices[1:]):
            out += [m, v]
        return " ".join(out)


def walk_in_graph(g: MixedGraph, walk: Walk) -> bool:
    for (a, b), m in zip(zip(walk.vertices, walk.vertices[1:]), walk.marks):
        if m == FORWARD and not g.has_edge(a, b):
            return False
        if m == BACKWARD and not g.has_edge(b, a):
            return False
        if m == BIDIRECTED and not g.has_bidirected(a, b):
            return False
    return True


def is_d_connecting(g: MixedGraph, walk: Walk, A: Iterable[str]) -> bool:
    """Check the definition directly: colliders in ``A``, non-colliders outside."""
    A = set(A)
    if len(walk.vertices) < 2 or walk.source == walk.target:
        return False
    if walk.source in A or walk.target in A or not walk_in_graph(g, walk):
        return False
    for w, coll in zip(walk.vertices[1:-1], walk.colliders()):
        if coll != (w in A):
            return False
    return True


def _check_query(g: MixedGraph, u, v, A) -> frozenset[str]:
    A = frozenset(A)
    for w in (u, v, *A):
        g.idx(w)
    if u == v:
        raise BadQuery("u and v must be distinct")
    if u in A or v in A:
        raise BadQuery("u and v must lie outside the conditioning set")
    return A


def _steps(g: MixedGraph, w: str):
    """Edges leaving ``w`` as (neighbor, mark), in declaration order of neighbors."""
    steps = [(c, FORWARD) for c in g.children[w]]
    steps += [(p, BACKWARD) for p in g.parents[w]]
    steps += [(s, BIDIRECTED) for s in g.siblings[w]]
    steps.sort(key=lambda s: (g.index[s[0]], s[1]))
    return steps


def _search(g: MixedGraph, starts, A: frozenset[str], target: str):
    """BFS over (vertex, head_in) states; head_in is None at the walk's start.

    Returns ``(found_state, parent_map)``.
    """
    parent = {s: None for s in starts}
    queue = deque(starts)
    while queue:
        state = queue.popleft()
        w, head_in = state
        if w == target and head_in is not None:
            return state, parent
        for x, mark in _steps(g, w):
            if head_in is not None:
                collider = head_in and _head_at_start(mark)
                if collider != (w in A):
                    continue
            nxt = (x, _head_at_end(mark))
            if nxt not in parent:
                parent[nxt] = (state, mark)
                queue.append(nxt)
    return None, parent


def _rebuild(end, parent) -> Walk:
    verts, marks = [end[0]], []
    state = end
    while parent[state] is not None:
        state, mark = parent[state]
        verts.append(state[0])
        marks.append(mark)
    return Walk(tuple(reversed(verts)), tuple(reversed(marks)))


def d_connected(g: MixedGraph, u: str, v: str, A: Iterable[str] = ()) -> tuple[bool, Walk | None]:
    """Is there a walk from ``u`` to ``v`` that is d-connecting given ``A``?

    Bidirected edges carry arrowheads at both ends, so on mixed graphs this is
    m-connection.  The witness is a shortest such walk.
    """
    A = _check_query(g, u, v, A)
    end, parent = _search(g, [(u, None)], A, v)
    if end is None:
        return False, None
    return True, _rebuild(end, parent)


def d_separated(g: MixedGraph, u: str, v: str, A: Iterable[str] = ()) -> bool:
    return not d_connected(g, u, v, A)[0]


def _require_digraph(g: MixedGraph):
    if not g.is_digraph:
        raise NotADigraph("operation is defined for digraphs only")


def tops(g: MixedGraph, u: str, v: str, A: Iterable[str] = ()) -> frozenset[str]:
    """Top nodes of the initial treks of all walks d-connecting ``u`` and ``v``.

    The initial trek of a walk runs from ``u`` to the first vertex in
    ``A | {v}``.  Its upward part avoids ``A | {v}`` and so does the interior
    of its downward part.  If it stops at some ``a`` in ``A`` it must enter
    ``a`` with an arrowhead, and the walk then has to continue from the
    collider ``a`` to ``v``.
    """
    _require_digraph(g)
    A = _check_query(g, u, v, A)
    stop = A | {v}
    up = ancestors(g, {u}, forbidden=stop)
    good = {v}
    for a in A:
        if _search(g, [(a, True)], A, v)[0] is not None:
            good.add(a)

    result = set()
    for t in up:
        seen = {t}
        queue = deque([t])
        while queue and t not in result:
            w = queue.popleft()
            for c in g.children[w]:
                if c in stop:
                    if c in good:
                        result.add(t)
                        break
                elif c not in seen:
                    seen.add(c)
                    queue.append(c)
    # the walk may climb straight up to v: v -> ... -> u
    if any(c in up for c in g.children[v]):
        result.add(v)
    return frozenset(result)


def negation_edge_set(g: MixedGraph, A: Iterable[str], one: str, two: str) -> tuple[tuple[str, str], ...]:
    """Edges from a top node into a non-top ancestor of ``one`` outside ``A``."""
    A = frozenset(A)
    top = tops(g, one, two, A)
    anc = ancestors(g, {one}, forbidden=A) - top
    return tuple(e for e in g.edges if e[0] in top and e[1] in anc)
