"""Treks, trek monomials, the trek rule and trek-system determinant expansions.

All routines here work on acyclic digraphs.  Symbolic results are
:class:`~chaincausal.poly.SparsePoly` objects over ``w_tt`` and ``l_uv``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import CapExceeded, NotADigraph, SizeMismatch
from .gaussian import ParamPoint
from .graph import MixedGraph, ancestors, require_acyclic
from .poly import SparsePoly, evaluate_compiled, lambda_var, omega_var

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class Trek:
    """Two directed paths out of a common top node.

    ``left`` runs from the top down to the source, ``right`` from the top
    down to the target; both start with the top.
    """

    left: tuple[str, ...]
    right: tuple[str, ...]

    def __post_init__(self):
        if not self.left or not self.right or self.left[0] != self.right[0]:
            raise ValueError("both sides of a trek start at the top node")

    @property
    def top(self) -> str:
        return self.left[0]

    @property
    def source(self) -> str:
        return self.left[-1]

    @property
    def target(self) -> str:
        return self.right[-1]

    @property
    def lhs(self) -> frozenset[str]:
        return frozenset(self.left)

    @property
    def rhs(self) -> frozenset[str]:
        return frozenset(self.right)

    def edges(self) -> list[tuple[str, str]]:
        """Edges on both sides; an edge used on both sides appears twice."""
        return list(zip(self.left, self.left[1:])) + list(zip(self.right, self.right[1:]))

    def is_valid(self, g: MixedGraph) -> bool:
        return all(g.has_edge(u, v) for u, v in self.edges())

    @classmethod
    def parse(cls, text: str) -> "Trek":
        """Parse ``"3 <- 1 -> 4 -> 5"``."""
        tokens = text.split()
        verts, marks = tokens[0::2], tokens[1::2]
        k = sum(1 for m in marks if m == "<-")
        if marks[:k] != ["<-"] * k or any(m != "->" for m in marks[k:]):
            raise ValueError(f"not a trek: {text!r}")
        return cls(tuple(reversed(verts[:k + 1])), tuple(verts[k:]))

    def __str__(self):
        parts = list(reversed(self.left))
        out = " <- ".join(parts)
        if len(self.right) > 1:
            out += " -> " + " -> ".join(self.right[1:])
        return out


def _require_dag(g: MixedGraph):
    if not g.is_digraph:
        raise NotADigraph("treks are defined on digraphs only")
    require_acyclic(g)


def directed_paths(g: MixedGraph, a: str, b: str) -> list[tuple[str, ...]]:
    """All directed paths from ``a`` to ``b`` (the trivial one when ``a == b``)."""
    anc_b = ancestors(g, {b})
    if a not in anc_b:
        return []
    out = []

    def walk(path):
        w = path[-1]
        if w == b:
            out.append(tuple(path))
            return
        for c in g.children[w]:
            if c in anc_b:
                path.append(c)
                walk(path)
                path.pop()

    walk([a])
    return out


def enumerate_treks(g: MixedGraph, u: str, v: str, cap: int = DEFAULT_CAP) -> list[Trek]:
    """Every trek from ``u`` to ``v``, grouped by top in declaration order."""
    _require_dag(g)
    common = ancestors(g, {u}) & ancestors(g, {v})
    out = []
    for t in g.sort(common):
        lefts = directed_paths(g, t, u)
        rights = directed_paths(g, t, v)
        if len(out) + len(lefts) * len(rights) > cap:
            raise CapExceeded(f"treks from {u} to {v}", cap)
        out.extend(Trek(l, r) for l in lefts for r in rights)
    return out


def trek_monomial(t: Trek) -> SparsePoly:
    pairs = [(omega_var(t.top), 1)] + [(lambda_var(x, y), 1) for x, y in t.edges()]
    return SparsePoly.monomial(pairs)


def trek_monomial_eval(t: Trek, p: ParamPoint) -> float:
    idx = {v: i for i, v in enumerate(p.labels)}
    val = p.omega[idx[t.top], idx[t.top]]
    for x, y in t.edges():
        val *= p.lam[idx[x], idx[y]]
    return float(val)


def param_values(g: MixedGraph, p: ParamPoint) -> dict:
    """Map trek-polynomial indeterminates to their values at ``p``."""
    vals = {omega_var(v): float(p.omega[g.index[v], g.index[v]]) for v in g.vertices}
    for u, v in g.edges:
        vals[lambda_var(u, v)] = float(p.lam[g.index[u], g.index[v]])
    return vals


def graph_variables(g: MixedGraph) -> list:
    return [omega_var(v) for v in g.vertices] + [lambda_var(u, v) for u, v in g.edges]


def value_matrix(g: MixedGraph, points: Sequence[ParamPoint]) -> np.ndarray:
    """Rows of indeterminate values, one per point, in :func:`graph_variables` order."""
    rows = []
    for p in points:
        vals = param_values(g, p)
        rows.append([vals[x] for x in graph_variables(g)])
    return np.array(rows, dtype=float)


class PolyMatrix:
    """Square matrix of polynomials indexed by vertex labels."""

    def __init__(self, labels, entries):
        self.labels = tuple(labels)
        self.entries = entries
        self._index = {v: i for i, v in enumerate(self.labels)}

    def __getitem__(self, key) -> SparsePoly:
        u, v = key
        return self.entries[self._index[u]][self._index[v]]

    def restrict(self, V: Sequence[str]) -> "PolyMatrix":
        return PolyMatrix(V, [[self[u, v] for v in V] for u in V])

    def evaluate(self, values) -> np.ndarray:
        return np.array([[e.evaluate(values) for e in row] for row in self.entries], dtype=float)

    def evaluate_many(self, g: MixedGraph, points: Sequence[ParamPoint]) -> np.ndarray:
        """Values at several points; result has shape ``(points, n, n)``."""
        variables = graph_variables(g)
        vals = value_matrix(g, points)
        n = len(self.labels)
        out = np.zeros((len(points), n, n))
        for i in range(n):
            for j in range(n):
                coefs, exps = self.entries[i][j].compile(variables)
                out[:, i, j] = evaluate_compiled(coefs, exps, vals)
        return out


def trek_rule_sigma(g: MixedGraph, cap: int = DEFAULT_CAP) -> PolyMatrix:
    """Covariance matrix as sums of trek monomials over all treks."""
    _require_dag(g)
    n = len(g)
    entries = [[SparsePoly() for _ in range(n)] for _ in range(n)]
    for i, u in enumerate(g.vertices):
        for j in range(i, n):
            entries[i][j] = entries[j][i] = _entry(g, u, g.vertices[j], cap)
    return PolyMatrix(g.vertices, entries)


# ------------------------------------------------------------------ trek systems


@dataclass(frozen=True)
class TrekSystem:
    """Treks ``treks[i]`` from ``sources[i]``; ``sign`` is that of the matching."""

    treks: tuple[Trek, ...]
    sources: tuple[str, ...]
    targets: tuple[str, ...]
    sign: int

    @property
    def no_sided_intersection(self) -> bool:
        return has_no_sided_intersection(self.treks)

    def monomial(self) -> SparsePoly:
        out = SparsePoly.constant(self.sign)
        for t in self.treks:
            out = out * trek_monomial(t)
        return out


def has_no_sided_intersection(treks: Sequence[Trek]) -> bool:
    for i in range(len(treks)):
        for j in range(i + 1, len(treks)):
            if treks[i].lhs & treks[j].lhs or treks[i].rhs & treks[j].rhs:
                return False
    return True


def permutation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def _check_sizes(X, Y):
    if len(X) != len(Y):
        raise SizeMismatch(f"|X| = {len(X)} differs from |Y| = {len(Y)}")
    if len(set(X)) != len(X) or len(set(Y)) != len(Y):
        raise ValueError("sources and targets must be pairwise distinct")


def trek_systems(g: MixedGraph, X: Sequence[str], Y: Sequence[str],
                 require_no_sided_intersection: bool = False, cap: int = DEFAULT_CAP) -> list[TrekSystem]:
    """All trek systems from ``X`` to ``Y`` over every bijection.

    The sign is that of the permutation sending position ``i`` of ``X`` to the
    position of its target in ``Y``, as in the Leibniz expansion of
    ``det(Sigma[X, Y])``.
    """
    _check_sizes(X, Y)
    _require_dag(g)
    X, Y = tuple(X), tuple(Y)
    n = len(X)
    cache = {(x, y): enumerate_treks(g, x, y, cap) for x in X for y in Y}
    out: list[TrekSystem] = []
    for perm in permutations(range(n)):
        sign = permutation_sign(perm)

        def extend(i, chosen):
            if i == n:
                if len(out) >= cap:
                    raise CapExceeded(f"trek systems from {X} to {Y}", cap)
                out.append(TrekSystem(tuple(chosen), X, Y, sign))
                return
            for t in cache[X[i], Y[perm[i]]]:
                if require_no_sided_intersection and not has_no_sided_intersection(chosen + [t]):
                    continue
                extend(i + 1, chosen + [t])

        extend(0, [])
    return out


class _TrekTable:
    """Per-graph bitmask encoding of treks for fast system enumeration.

    A trek becomes ``(left_mask, right_mask, packed_monomial)`` where the
    monomial's exponent vector is packed into an integer with ``_BITS`` bits
    per indeterminate, so multiplying monomials is integer addition.
    """

    _BITS = 8

    def __init__(self, g: MixedGraph, cap: int):
        self.g = g
        self.cap = cap
        self.variables = [omega_var(v) for v in g.vertices] + [lambda_var(u, v) for u, v in g.edges]
        self.var_pos = {x: i for i, x in enumerate(self.variables)}
        self.bit = {v: 1 << i for i, v in enumerate(g.vertices)}
        self._treks: dict = {}

    def treks(self, x: str, y: str):
        key = (x, y)
        if key not in self._treks:
            rows = []
            for t in enumerate_treks(self.g, x, y, self.cap):
                lm = rm = 0
                for w in t.left:
                    lm |= self.bit[w]
                for w in t.right:
                    rm |= self.bit[w]
                packed = 1 << (self._BITS * self.var_pos[omega_var(t.top)])
                for a, b in t.edges():
                    packed += 1 << (self._BITS * self.var_pos[lambda_var(a, b)])
                rows.append((lm, rm, packed))
            self._treks[key] = rows
        return self._treks[key]

    def unpack(self, packed: int):
        mask = (1 << self._BITS) - 1
        pairs = []
        i = 0
        while packed:
            e = packed & mask
            if e:
                pairs.append((self.variables[i], e))
            packed >>= self._BITS
            i += 1
        return pairs


_tables: dict = {}


def _table(g: MixedGraph, cap: int) -> _TrekTable:
    key = (g, cap)
    tab = _tables.get(key)
    if tab is None:
        if len(_tables) > 64:
            _tables.clear()
        tab = _tables[key] = _TrekTable(g, cap)
    return tab


def _nsi_search(tab: _TrekTable, X, Y, on_leaf):
    n = len(X)
    count = [0]

    def rec(i, used, lm, rm, mono, parity):
        if i == n:
            count[0] += 1
            if count[0] > tab.cap:
                raise CapExceeded(f"trek systems from {tuple(X)} to {tuple(Y)}", tab.cap)
            return on_leaf(mono, -1 if parity else 1)
        for j in range(n):
            if used >> j & 1:
                continue
            # positions already used to the right of j are inversions
            inv = bin(used >> (j + 1)).count("1")
            for l, r, m in tab.treks(X[i], Y[j]):
                if l & lm or r & rm:
                    continue
                if rec(i + 1, used | 1 << j, lm | l, rm | r, mono + m, parity ^ (inv & 1)):
                    return True
        return False

    return rec(0, 0, 0, 0, 0, 0)


def det_via_treks(g: MixedGraph, X: Sequence[str], Y: Sequence[str], cap: int = DEFAULT_CAP) -> SparsePoly:
    """Signed sum over trek systems without sided intersection.

    Equals ``det(Sigma[X, Y])`` as a polynomial for rows ordered as ``X`` and
    columns ordered as ``Y``.
    """
    _check_sizes(X, Y)
    _require_dag(g)
    tab = _table(g, cap)
    acc: dict[int, int] = {}

    def leaf(mono, sign):
        s = acc.get(mono, 0) + sign
        if s:
            acc[mono] = s
        else:
            acc.pop(mono, None)
        return False

    _nsi_search(tab, tuple(X), tuple(Y), leaf)
    return SparsePoly({tuple(tab.unpack(m)): Fraction(c) for m, c in acc.items()})


def has_nsi_system(g: MixedGraph, X: Sequence[str], Y: Sequence[str], cap: int = DEFAULT_CAP) -> bool:
    """Does some trek system from ``X`` to ``Y`` have no sided intersection?"""
    _check_sizes(X, Y)
    _require_dag(g)
    return _nsi_search(_table(g, cap), tuple(X), tuple(Y), lambda mono, sign: True)


def marginal_sigma(g: MixedGraph, V: Sequence[str]) -> PolyMatrix:
    """Trek-rule covariance restricted to the vertices ``V``."""
    _require_dag(g)
    return PolyMatrix(V, [[_entry(g, u, v) for v in V] for u in V])


def _entry(g, u, v, cap=DEFAULT_CAP):
    total = SparsePoly()
    for t in enumerate_treks(g, u, v, cap):
        total = total + trek_monomial(t)
    return total


__all__ = [
    "Trek", "TrekSystem", "PolyMatrix", "enumerate_treks", "directed_paths", "trek_monomial",
    "trek_monomial_eval", "trek_rule_sigma", "trek_systems", "det_via_treks", "has_nsi_system",
    "has_no_sided_intersection", "marginal_sigma", "param_values", "graph_variables",
    "value_matrix", "permutation_sign",
]
