"""Covariance algebra for linear structural equation models.

``Sigma = (I - Lambda)^{-T} Omega (I - Lambda)^{-1}`` with ``Lambda``
supported on the directed edges and ``Omega`` on the diagonal plus the
bidirected edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (BadQuery, NotChainGraph, NotPositiveDefinite,
                     SingularBlock, SupportViolation, UnknownVertex)
from .graph import MixedGraph, is_chain_graph, topological_order
from .separation import d_connected

ZERO_TOL = 1e-9
NONZERO_TOL = 1e-6
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class ParamPoint:
    """Edge coefficients ``lam`` and error covariance ``omega``.

    ``lam[i, j]`` is the coefficient of edge ``labels[i] -> labels[j]``.
    """

    labels: tuple[str, ...]
    lam: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        lam = np.array(self.lam, dtype=float)
        omega = np.array(self.omega, dtype=float)
        n = len(self.labels)
        if lam.shape != (n, n) or omega.shape != (n, n):
            raise ValueError("parameter matrices must be square over the labels")
        lam.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "omega", omega)

    def allclose(self, other: "ParamPoint", atol=1e-9) -> bool:
        return (self.labels == other.labels
                and np.allclose(self.lam, other.lam, atol=atol, rtol=0)
                and np.allclose(self.omega, other.omega, atol=atol, rtol=0))

    def with_lambda(self, lam) -> "ParamPoint":
        return ParamPoint(self.labels, lam, self.omega)


def check_support(g: MixedGraph, p: ParamPoint) -> None:
    if p.labels != g.vertices:
        raise SupportViolation("parameter labels differ from graph vertices")
    n = len(g)
    lam_mask = np.zeros((n, n), bool)
    for u, v in g.edges:
        lam_mask[g.index[u], g.index[v]] = True
    om_mask = np.eye(n, dtype=bool)
    for u, v in g.bi_edges:
        om_mask[g.index[u], g.index[v]] = om_mask[g.index[v], g.index[u]] = True
    if np.any(p.lam[~lam_mask] != 0):
        raise SupportViolation("lambda has entries outside the directed edges")
    if np.any(p.omega[~om_mask] != 0):
        raise SupportViolation("omega has entries outside the diagonal and bidirected edges")


def _is_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


class CovMatrix:
    """A symmetric positive definite matrix indexed by vertex labels."""

    def __init__(self, labels: Iterable, matrix, check: bool = True):
        self.labels = tuple(str(v) for v in labels)
        m = np.array(matrix, dtype=float)
        if m.shape != (len(self.labels), len(self.labels)):
            raise ValueError("matrix shape does not match labels")
        if check:
            scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
            if not np.allclose(m, m.T, atol=1e-12 * scale, rtol=0):
                raise ValueError("covariance matrix is not symmetric")
            if m.size and not _is_pd(m):
                raise NotPositiveDefinite("covariance matrix is not positive definite")
        m.setflags(write=False)
        self.matrix = m
        self._index = {v: i for i, v in enumerate(self.labels)}

    def __repr__(self):
        return f"CovMatrix(labels={list(self.labels)}, matrix={self.matrix.tolist()})"

    def idx(self, v) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def __getitem__(self, key):
        u, v = key
        return float(self.matrix[self.idx(u), self.idx(v)])

    def block(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        r = [self.idx(v) for v in rows]
        c = [self.idx(v) for v in cols]
        return self.matrix[np.ix_(r, c)]

    def det(self, rows: Sequence[str], cols: Sequence[str]) -> float:
        if len(rows) != len(cols):
            raise ValueError("determinant needs a square block")
        if not rows:
            return 1.0
        return float(np.linalg.det(self.block(rows, cols)))

    def marginal(self, V: Sequence[str]) -> "CovMatrix":
        return marginal(self, V)

    def cond_cov(self, u, v, A=()) -> float:
        return cond_cov(self, u, v, A)

    def correlation(self) -> "CovMatrix":
        d = 1.0 / np.sqrt(np.diag(self.matrix))
        return CovMatrix(self.labels, self.matrix * np.outer(d, d), check=False)


def marginal(s: CovMatrix, V: Sequence[str]) -> CovMatrix:
    V = list(V)
    return CovMatrix(V, s.block(V, V), check=False)


def _solve_block(s: CovMatrix, A: Sequence[str], rhs: np.ndarray) -> np.ndarray:
    saa = s.block(A, A)
    if np.linalg.cond(saa) > COND_LIMIT:
        raise SingularBlock(f"conditioning block on {list(A)} is numerically singular")
    return np.linalg.solve(saa, rhs)


def cond_cov_matrix(s: CovMatrix, S: Sequence[str], A: Iterable[str] = ()) -> np.ndarray:
    """Schur complement ``Sigma_{S,S} - Sigma_{S,A} Sigma_{A,A}^{-1} Sigma_{A,S}``."""
    S, A = list(S), list(A)
    if set(S) & set(A):
        raise BadQuery("conditioned vertices must lie outside the conditioning set")
    sss = s.block(S, S)
    if not A:
        return sss.copy()
    ssa = s.block(S, A)
    return sss - ssa @ _solve_block(s, A, ssa.T)


def cond_cov(s: CovMatrix, u: str, v: str, A: Iterable[str] = ()) -> float:
    """Conditional covariance of ``u`` and ``v`` given ``A``."""
    A = list(A)
    if u in A or v in A:
        raise BadQuery("u and v must lie outside A")
    suv = s[u, v]
    if not A:
        return suv
    sua = s.block([u], A)
    sav = s.block(A, [v])
    return float(suv - (sua @ _solve_block(s, A, sav))[0, 0])


# ----------------------------------------------------------------- sigma / inverse map


def _omega_pd(omega: np.ndarray):
    if not _is_pd(omega):
        raise NotPositiveDefinite("omega is not positive definite")


def sigma_of(g: MixedGraph, p: ParamPoint) -> CovMatrix:
    """Covariance matrix of the model at ``p`` via triangular solves."""
    check_support(g, p)
    _omega_pd(p.omega)
    order = [g.index[v] for v in topological_order(g)]
    perm = np.array(order)
    n = len(perm)
    # in topological order I - Lambda is unit upper triangular
    ilam = np.eye(n) - p.lam[np.ix_(perm, perm)]
    inv = solve_triangular(ilam, np.eye(n), lower=False, unit_diagonal=True)
    sig_perm = inv.T @ p.omega[np.ix_(perm, perm)] @ inv
    sig = np.empty_like(sig_perm)
    sig[np.ix_(perm, perm)] = sig_perm
    sig = (sig + sig.T) / 2
    return CovMatrix(g.vertices, sig, check=False)


def recover_params(g: MixedGraph, s: CovMatrix) -> ParamPoint:
    """Regression coefficients on parents and residual variances.

    On a digraph and a point of its model this inverts :func:`sigma_of`.  On
    a chain graph the same regressions recover ``Lambda``; ``omega`` is then
    returned in full as ``(I - Lambda)^T Sigma (I - Lambda)``.
    """
    s = marginal(s, g.vertices)
    n = len(g)
    lam = np.zeros((n, n))
    for v in g.vertices:
        pa = list(g.parents[v])
        if pa:
            coef = _solve_block(s, pa, s.block(pa, [v]))[:, 0]
            for u, c in zip(pa, coef):
                lam[g.index[u], g.index[v]] = c
    ilam = np.eye(n) - lam
    omega = ilam.T @ s.matrix @ ilam
    mask = np.eye(n, dtype=bool)
    for u, v in g.bi_edges:
        mask[g.index[u], g.index[v]] = mask[g.index[v], g.index[u]] = True
    omega = np.where(mask, (omega + omega.T) / 2, 0.0)
    return ParamPoint(g.vertices, lam, omega)


def sample_params(g: MixedGraph, seed: int = 42, scale: float = 1.0) -> ParamPoint:
    """Draw a generic parameter point, reproducibly per seed.

    Edge coefficients are uniform on ``[-scale, scale]`` with ``|x| >= 0.1 scale``.
    Error variances are uniform on ``[0.5, 1.5]``; bidirected entries use the
    same law as edge coefficients, after which the diagonal is shifted until
    the smallest eigenvalue is at least 0.1.
    """
    rng = np.random.default_rng(seed)
    n = len(g)

    def coef():
        return rng.choice([-1.0, 1.0]) * rng.uniform(0.1 * scale, scale)

    lam = np.zeros((n, n))
    for u, v in g.edges:
        lam[g.index[u], g.index[v]] = coef()
    omega = np.diag(rng.uniform(0.5, 1.5, size=n))
    for u, v in g.bi_edges:
        i, j = g.index[u], g.index[v]
        omega[i, j] = omega[j, i] = coef()
    if g.bi_edges:
        low = np.linalg.eigvalsh(omega)[0]
        if low < 0.1:
            omega += np.eye(n) * (0.1 - low)
    return ParamPoint(g.vertices, lam, omega)


def trial_seed(seed: int, *keys: int) -> int:
    """Independent per-trial seed derived from ``(seed, *keys)``."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


# ------------------------------------------------------------------ chain-graph CI


@lru_cache(maxsize=256)
def separation_triples(g: MixedGraph, max_size: int | None = None) -> tuple[tuple[str, str, tuple[str, ...]], ...]:
    """All ``(u, v, A)`` with ``u`` before ``v`` and no d-connecting walk given ``A``."""
    out = []
    verts = g.vertices
    for u, v in combinations(verts, 2):
        rest = [w for w in verts if w not in (u, v)]
        top = len(rest) if max_size is None else min(max_size, len(rest))
        for k in range(top + 1):
            for A in combinations(rest, k):
                if not d_connected(g, u, v, A)[0]:
                    out.append((u, v, A))
    return tuple(out)


class Membership(NamedTuple):
    member: bool
    violations: list


def membership_chain(g: MixedGraph, s: CovMatrix, tol: float = ZERO_TOL,
                     max_size: int | None = None) -> Membership:
    """Test whether ``s`` satisfies every conditional independence of a chain graph.

    ``s`` is rescaled to unit diagonal first.  Conditioning sets are all
    subsets when the graph has at most 12 vertices, otherwise at most 3
    elements unless ``max_size`` says otherwise.
    """
    if not is_chain_graph(g):
        raise NotChainGraph("membership test requires a chain graph")
    if max_size is None and len(g) > 12:
        max_size = 3
    corr = marginal(s, g.vertices).correlation()
    violations = []
    for u, v, A in separation_triples(g, max_size):
        val = cond_cov(corr, u, v, A)
        if abs(val) > tol:
            violations.append((u, v, A, val))
    return Membership(not violations, violations)
