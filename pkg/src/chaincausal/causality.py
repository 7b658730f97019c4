"""Strict Gaussian causality of chain graphs.

A chain graph is strictly Gaussian causal exactly when its bidirected part is
decomposable.  :func:`decide_strict_causal` returns the clique digraph as a
witness in that case and otherwise a refutation: a chordless bidirected
cycle, a matrix on that cycle that stops being positive definite once its
``(1, 2)`` entries are negated, and a numerical check that negating the
coefficients of the edges returned by
:func:`~chaincausal.separation.negation_edge_set` negates exactly that entry of
the conditional covariance on the cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import (BadQuery, BudgetExceeded, ConvergenceFailure, NotChainGraph,
                     NotDecomposable, NotPositiveDefinite, SearchFailure,
                     SingularBlock, SupportViolation)
from .gaussian import (CovMatrix, ParamPoint, cond_cov_matrix, marginal,
                       membership_chain, recover_params, sample_params,
                       separation_triples, sigma_of, trial_seed)
from .graph import (LatentDigraph, MixedGraph, ancestors,
                    canonical_dag, chain_components, clique_digraph,
                    is_acyclic, is_chain_graph, is_decomposable)
from .separation import d_separated, negation_edge_set

SCHEMA_VERSION = 1
STRICTLY_CAUSAL = "StrictlyCausal"
NOT_STRICTLY_CAUSAL = "NotStrictlyCausal"


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


# ---------------------------------------------------------------------- sign flip


def sign_flip(phi) -> np.ndarray:
    """Copy of ``phi`` with the ``(1, 2)`` and ``(2, 1)`` entries negated."""
    phi = np.array(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != phi.shape[1] or phi.shape[0] < 2:
        raise ValueError("sign_flip needs a square matrix of size at least 2")
    phi[0, 1] = -phi[0, 1]
    phi[1, 0] = -phi[1, 0]
    return phi


def min_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(np.asarray(m, dtype=float))[0])


def cycle_matrix(weights: Sequence[float]) -> np.ndarray:
    """Unit-diagonal matrix with ``weights[i]`` on cycle edge ``(i, i+1 mod p)``."""
    p = len(weights)
    m = np.eye(p)
    for i, w in enumerate(weights):
        j = (i + 1) % p
        m[i, j] = m[j, i] = w
    return m


def _margin(phi, min_eig, flip_eig):
    return min(min_eigenvalue(phi) - min_eig, flip_eig - min_eigenvalue(sign_flip(phi)))


def find_sign_flip_counterexample(p: int, min_eig: float = 0.01, flip_eig: float = -0.05,
                                  seed: int = 0, budget: int = 20000) -> np.ndarray:
    """A positive definite cycle matrix whose sign flip is not positive definite.

    Searches equal-magnitude weights first: the sign product around the cycle
    is negative for even ``p`` and positive for odd ``p``, so that flipping
    one entry moves the spectrum from ``1 - 2a cos(pi/p)`` down to ``1 - 2a``.
    A seeded random search over ``(-0.75, 0.75)^p`` is the fallback.
    """
    if p < 4:
        raise ValueError("a chordless cycle has at least four vertices")

    def structured(a):
        w = [a] * p
        if p % 2 == 0:
            w[0] = -a
        return cycle_matrix(w)

    grid = np.arange(0.005, 0.75, 0.005)
    scores = [_margin(structured(a), min_eig, flip_eig) for a in grid]
    i = int(np.argmax(scores))
    if scores[i] > 0:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(lambda a: -_margin(structured(a), min_eig, flip_eig),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        a = float(np.round(res.x, 6)) if -res.fun >= scores[i] else float(grid[i])
        return structured(a)

    rng = np.random.default_rng(seed)
    best, best_score = None, 0.0
    for _ in range(budget):
        phi = cycle_matrix(rng.uniform(-0.75, 0.75, size=p))
        score = _margin(phi, min_eig, flip_eig)
        if score > best_score:
            best, best_score = phi, score
    if best is None:
        raise SearchFailure(f"no sign-flip counterexample found for p={p}")
    return best


# ------------------------------------------------------------------ negation


def gamma_negation(d: MixedGraph, A: Iterable[str], one: str, two: str, p: ParamPoint) -> ParamPoint:
    """Negate the coefficients on :func:`negation_edge_set`; leave the rest alone."""
    A = frozenset(A)
    if one in A or two in A or one == two:
        raise BadQuery("one and two must be distinct and outside A")
    lam = np.array(p.lam)
    for u, v in negation_edge_set(d, A, one, two):
        i, j = d.index[u], d.index[v]
        lam[i, j] = -lam[i, j]
    return ParamPoint(p.labels, lam, p.omega)


@dataclass
class IdentityReport:
    cycle: tuple
    A: tuple
    negated_edges: tuple
    points: int
    max_error_AA: float
    max_error_12: float
    max_error_other: float
    max_error_flip: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "cycle": list(self.cycle),
            "A": list(self.A),
            "negated_edges": [list(e) for e in self.negated_edges],
            "points": self.points,
            "max_error_AA": self.max_error_AA,
            "max_error_12": self.max_error_12,
            "max_error_other": self.max_error_other,
            "max_error_flip": self.max_error_flip,
            "tol": self.tol,
            "passed": self.passed,
        }


def verify_determinant_identities(d: MixedGraph, A: Iterable[str], cycle: Sequence[str],
                                  points, tol: float = 1e-9) -> IdentityReport:
    """Compare subdeterminants of ``Sigma`` and of ``Sigma'`` after negation.

    ``cycle[0]`` and ``cycle[1]`` play the roles of nodes 1 and 2.  Checks,
    at every point, that ``det Sigma'[A, A]`` is unchanged, that
    ``det Sigma'[1A, 2A]`` changes sign, that ``det Sigma'[uA, vA]`` is
    unchanged for every other pair on the cycle, and that the conditional
    covariance on the cycle equals the sign flip of the original.  An error
    counts against ``tol * max(1, |reference|)``.
    """
    A = tuple(A)
    cycle = tuple(cycle)
    if isinstance(points, ParamPoint):
        points = [points]
    one, two = cycle[0], cycle[1]
    edges = negation_edge_set(d, A, one, two)
    errs = {"AA": 0.0, "12": 0.0, "other": 0.0, "flip": 0.0}
    ok = True

    def record(key, err, ref):
        nonlocal ok
        errs[key] = max(errs[key], err)
        if err > tol * max(1.0, abs(ref)):
            ok = False

    count = 0
    for p in points:
        count += 1
        s = sigma_of(d, p)
        s2 = sigma_of(d, gamma_negation(d, A, one, two, p))
        ref = s.det(A, A)
        record("AA", abs(s2.det(A, A) - ref), ref)
        for u in cycle:
            for v in cycle:
                rows, cols = (u,) + A, (v,) + A
                before, after = s.det(rows, cols), s2.det(rows, cols)
                if {u, v} == {one, two}:
                    record("12", abs(after + before), before)
                else:
                    record("other", abs(after - before), before)
        phi = cond_cov_matrix(s, cycle, A)
        phi2 = cond_cov_matrix(s2, cycle, A)
        diff = np.abs(phi2 - sign_flip(phi))
        record("flip", float(diff.max()), float(np.abs(phi).max()))
    return IdentityReport(cycle, A, tuple(edges), count, errs["AA"], errs["12"],
                          errs["other"], errs["flip"], tol, ok)


def check_determinant_identities(d: MixedGraph, A: Iterable[str], cycle: Sequence[str],
                                 trials: int = 200, seed: int = 42, tol: float = 1e-9) -> IdentityReport:
    points = (sample_params(d, trial_seed(seed, 3, t)) for t in range(trials))
    return verify_determinant_identities(d, A, cycle, points, tol)


# ---------------------------------------------------------------- realization


@dataclass
class RealizationResult:
    """``omega == diag(delta[:n]) + gamma21.T @ diag(delta[n:]) @ gamma21``."""

    labels: tuple
    cliques: tuple
    gamma21: np.ndarray
    delta: np.ndarray
    residual: float
    method: str

    def reconstruct(self) -> np.ndarray:
        n = len(self.labels)
        return np.diag(self.delta[:n]) + self.gamma21.T @ np.diag(self.delta[n:]) @ self.gamma21


def _omega_array(pattern: MixedGraph, omega) -> np.ndarray:
    if isinstance(omega, CovMatrix):
        return marginal(omega, pattern.vertices).matrix.copy()
    return np.array(omega, dtype=float)


def realize_omega(pattern: MixedGraph, cliques: Sequence[Sequence[str]], omega,
                  tol: float = 1e-6, strict: bool = True, seed: int = 0) -> RealizationResult:
    """Write ``omega`` as a positive diagonal plus one rank-one term per clique.

    For a decomposable pattern the terms come from eliminating vertices along
    a perfect elimination ordering: each step peels off a rank-one term on
    the vertex and its remaining neighbours while keeping the remainder
    positive definite.  Otherwise, or when a needed clique is not offered,
    the factorisation is fitted by least squares and accepted only if the
    residual is within ``tol``.
    """
    om = _omega_array(pattern, omega)
    n = len(pattern)
    if om.shape != (n, n):
        raise ValueError("omega must be square over the pattern's vertices")
    mask = np.eye(n, dtype=bool)
    for u, v in pattern.bi_edges:
        mask[pattern.index[u], pattern.index[v]] = mask[pattern.index[v], pattern.index[u]] = True
    scale = max(1.0, float(np.abs(om).max()))
    if np.any(np.abs(om[~mask]) > 1e-12 * scale):
        raise SupportViolation("omega has entries outside the diagonal and bidirected edges")
    om = np.where(mask, (om + om.T) / 2, 0.0)
    if min_eigenvalue(om) <= 0:
        raise NotPositiveDefinite("omega is not positive definite")
    cliques = tuple(tuple(c) for c in cliques)
    report = is_decomposable(pattern)
    if not report.decomposable and strict:
        raise NotDecomposable(f"bidirected part has chordless cycle {report.certificate}")
    if report.decomposable:
        res = _realize_by_elimination(pattern, cliques, om, report.elimination_ordering)
        if res is not None and res.residual <= tol:
            return res
    return _realize_by_least_squares(pattern, cliques, om, tol, seed)


def _realize_by_elimination(pattern, cliques, om, peo):
    n, k = len(pattern), len(cliques)
    idx = pattern.index
    sets = [frozenset(c) for c in cliques]
    gamma = np.zeros((k, n))
    delta = np.ones(n + k)
    used: set[int] = set()
    w = om.copy()
    order = [idx[v] for v in peo]
    for pos, v in enumerate(order):
        rest = order[pos + 1:]
        nb = [u for u in rest if pattern.has_bidirected(pattern.vertices[v], pattern.vertices[u])
              and w[v, u] != 0.0]
        if not nb:
            delta[v] = w[v, v]
            continue
        c = w[rest, v]
        s = w[np.ix_(rest, rest)]
        kappa = float(c @ np.linalg.solve(s, c)) / w[v, v]
        theta = (1.0 + kappa) / 2.0
        members = frozenset(pattern.vertices[i] for i in [v] + nb)
        choices = [h for h in range(k) if h not in used and members <= sets[h]]
        if not choices:
            return None
        h = min(choices, key=lambda h: (len(sets[h]), h))
        used.add(h)
        rv = np.sqrt(theta * w[v, v])
        r = w[nb, v] / rv
        gamma[h, v] = rv
        gamma[h, nb] = r
        delta[v] = w[v, v] * (1.0 - theta)
        w[np.ix_(nb, nb)] -= np.outer(r, r)
    recon = np.diag(delta[:n]) + gamma.T @ gamma
    return RealizationResult(pattern.vertices, cliques, gamma, delta,
                             float(np.abs(recon - om).max()), "elimination")


def _realize_by_least_squares(pattern, cliques, om, tol, seed, starts: int = 8):
    n, k = len(pattern), len(cliques)
    support = [(h, pattern.index[v]) for h, c in enumerate(cliques) for v in c]
    iu = np.triu_indices(n)
    ns = len(support)

    def unpack(x):
        gamma = np.zeros((k, n))
        for (h, j), val in zip(support, x[:ns]):
            gamma[h, j] = val
        return gamma, np.exp(x[ns:])

    def resid(x):
        gamma, dv = unpack(x)
        return (np.diag(dv) + gamma.T @ gamma - om)[iu]

    def jac(x):
        gamma, dv = unpack(x)
        out = np.zeros((n, n, ns + n))
        for col, (h, j) in enumerate(support):
            # d(G^T G)[a, b] / d gamma[h, j] = [a == j] gamma[h, b] + [b == j] gamma[h, a]
            out[j, :, col] += gamma[h]
            out[:, j, col] += gamma[h]
        for j in range(n):
            out[j, j, ns + j] = dv[j]
        return out[iu]

    rng = np.random.default_rng(seed)
    best = None
    diag = np.diag(om)
    for _ in range(starts):
        x0 = np.concatenate([rng.normal(0, 0.5, ns), np.log(diag * rng.uniform(0.2, 0.8, n))])
        sol = least_squares(resid, x0, jac=jac, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        err = float(np.abs(sol.fun).max())
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err <= tol * 1e-3:
            break
    err, x = best
    gamma, dv = unpack(x)
    result = RealizationResult(pattern.vertices, cliques, gamma,
                               np.concatenate([dv, np.ones(k)]), err, "least_squares")
    if err > tol:
        raise ConvergenceFailure("omega could not be realized on the given cliques", err, result)
    return result


# --------------------------------------------------------------- model equality


@dataclass
class EqualityReport:
    trials: int
    tol: float
    containment_residuals: list = field(default_factory=list)
    reproduction_residuals: list = field(default_factory=list)
    note: str = "numerical evidence from sampled parameters, not a proof"

    @property
    def containment_passed(self) -> bool:
        return all(r <= self.tol for r in self.containment_residuals)

    @property
    def reproduction_passed(self) -> bool:
        return all(r <= self.tol for r in self.reproduction_residuals)

    @property
    def passed(self) -> bool:
        return self.containment_passed and self.reproduction_passed

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "tol": self.tol,
            "containment": {"passed": self.containment_passed,
                            "residuals": [float(r) for r in self.containment_residuals]},
            "reproduction": {"passed": self.reproduction_passed,
                             "residuals": [float(r) for r in self.reproduction_residuals]},
            "passed": self.passed,
            "note": self.note,
        }


def clique_structure(g: MixedGraph, d: LatentDigraph):
    """Hidden cliques of ``d`` if it has the shape of a clique digraph of ``g``.

    That shape is: observed edges equal to the directed edges of ``g`` and
    every hidden vertex a source whose children form a bidirected clique.
    Returns ``None`` otherwise.
    """
    dg = d.graph
    hidden = set(d.hidden)
    if set(d.observed) != set(g.vertices):
        return None
    obs_edges = {e for e in dg.edges if e[0] not in hidden}
    if obs_edges != set(g.edges) or any(e[1] in hidden for e in obs_edges):
        return None
    cliques = []
    for h in d.hidden:
        if dg.parents[h]:
            return None
        kids = dg.children[h]
        if any(k in hidden for k in kids):
            return None
        if any(not g.has_bidirected(a, b) for i, a in enumerate(kids) for b in kids[i + 1:]):
            return None
        cliques.append(g.sort(kids))
    return cliques


def _point_on_witness(g, d, cliques, sigma: CovMatrix, tol, seed):
    lam_g = recover_params(g, sigma).lam
    n = len(g)
    ilam = np.eye(n) - lam_g
    omega = ilam.T @ marginal(sigma, g.vertices).matrix @ ilam
    mask = np.eye(n, dtype=bool)
    for u, v in g.bi_edges:
        mask[g.index[u], g.index[v]] = mask[g.index[v], g.index[u]] = True
    omega = np.where(mask, (omega + omega.T) / 2, 0.0)
    real = realize_omega(g, cliques, omega, tol=tol, strict=False, seed=seed)
    dg = d.graph
    lam = np.zeros((len(dg), len(dg)))
    for u, v in g.edges:
        lam[dg.index[u], dg.index[v]] = lam_g[g.index[u], g.index[v]]
    hidden = list(d.hidden)
    om = np.zeros((len(dg), len(dg)))
    for v in g.vertices:
        om[dg.index[v], dg.index[v]] = real.delta[g.index[v]]
    for row, (h, members) in enumerate(zip(hidden, cliques)):
        om[dg.index[h], dg.index[h]] = real.delta[n + row]
        for v in members:
            lam[dg.index[h], dg.index[v]] = real.gamma21[row, g.index[v]]
    return ParamPoint(dg.vertices, lam, om)


def fit_latent(d: LatentDigraph, sigma: CovMatrix, seed: int = 0, starts: int = 8) -> tuple[float, ParamPoint]:
    """Least-squares fit of a hidden-variable digraph to an observed covariance.

    Returns ``(max abs residual, parameters)``.  Without hidden vertices the
    regression formulas give the answer directly.
    """
    dg = d.graph
    obs = list(d.observed)
    target = marginal(sigma, obs).matrix
    if not d.hidden:
        p = recover_params(dg, marginal(sigma, dg.vertices))
        err = float(np.abs(sigma_of(dg, p).matrix - marginal(sigma, dg.vertices).matrix).max())
        return err, p
    edges = list(dg.edges)
    m = len(dg)
    obs_idx = [dg.index[v] for v in obs]
    iu = np.triu_indices(len(obs))

    def build(x):
        lam = np.zeros((m, m))
        for (u, v), val in zip(edges, x[:len(edges)]):
            lam[dg.index[u], dg.index[v]] = val
        return ParamPoint(dg.vertices, lam, np.diag(np.exp(x[len(edges):])))

    def resid(x):
        s = sigma_of(dg, build(x)).matrix[np.ix_(obs_idx, obs_idx)]
        return (s - target)[iu]

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        x0 = np.concatenate([rng.normal(0, 0.7, len(edges)), rng.normal(-0.5, 0.3, m)])
        sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=3000)
        err = float(np.abs(sol.fun).max())
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err < 1e-10:
            break
    return best[0], build(best[1])


def verify_model_equality(g: MixedGraph, d: LatentDigraph, trials: int = 20, tol: float = 1e-6,
                          seed: int = 42, extra: Sequence[CovMatrix] = ()) -> EqualityReport:
    """Sample-based evidence that the hidden-variable model of ``d`` equals ``N(g)``.

    Containment: covariances sampled from ``d`` and marginalised to the
    observed vertices must satisfy every conditional independence of ``g``
    (the residual is the largest violated partial correlation).
    Reproduction: covariances sampled from ``g``, and any ``extra`` ones, must
    be reproduced by parameters on ``d`` (the residual is the largest entry
    difference).
    """
    if not is_chain_graph(g):
        raise NotChainGraph("model equality harness needs a chain graph")
    if not set(g.vertices) <= set(d.graph.vertices):
        raise BadQuery("observed vertices of g must be vertices of d")
    report = EqualityReport(trials, tol)
    for t in range(trials):
        p = sample_params(d.graph, trial_seed(seed, 1, t))
        s = marginal(sigma_of(d.graph, p), g.vertices)
        mem = membership_chain(g, s, tol)
        report.containment_residuals.append(max((abs(x[3]) for x in mem.violations), default=0.0))

    cliques = clique_structure(g, d)
    targets = [sigma_of(g, sample_params(g, trial_seed(seed, 2, t))) for t in range(trials)]
    targets += [marginal(s, g.vertices) for s in extra]
    for t, s in enumerate(targets):
        report.reproduction_residuals.append(_reproduce(g, d, cliques, s, tol, trial_seed(seed, 4, t)))
    return report


def _reproduce(g, d, cliques, sigma, tol, seed) -> float:
    if cliques is None:
        return fit_latent(d, sigma, seed=seed)[0]
    try:
        p = _point_on_witness(g, d, cliques, sigma, tol, seed)
    except ConvergenceFailure as exc:
        return exc.best_residual
    except (NotPositiveDefinite, SingularBlock):
        return float("inf")
    rec = marginal(sigma_of(d.graph, p), g.vertices).matrix
    return float(np.abs(rec - marginal(sigma, g.vertices).matrix).max())


# --------------------------------------------------------------------- decide


@dataclass
class RefutationCertificate:
    cycle: tuple
    component: tuple
    A: tuple
    phi: np.ndarray
    phi_min_eigenvalue: float
    phi_flipped_min_eigenvalue: float
    identities: IdentityReport | None = None

    def to_dict(self) -> dict:
        return {
            "cycle": list(self.cycle),
            "component": list(self.component),
            "A": list(self.A),
            "phi": _floats(self.phi),
            "phi_min_eigenvalue": self.phi_min_eigenvalue,
            "phi_flipped_min_eigenvalue": self.phi_flipped_min_eigenvalue,
            "identities": None if self.identities is None else self.identities.to_dict(),
        }


@dataclass
class CausalityVerdict:
    decision: str
    witness: LatentDigraph | None = None
    refutation: RefutationCertificate | None = None

    @property
    def strictly_causal(self) -> bool:
        return self.decision == STRICTLY_CAUSAL

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "decision": self.decision}
        if self.witness is not None:
            dg = self.witness.graph
            out["witness"] = {
                "nodes": list(dg.vertices),
                "directed": [list(e) for e in dg.edges],
                "hidden": {h: list(m) for h, m in self.witness.hidden.items()},
            }
        if self.refutation is not None:
            out["refutation"] = self.refutation.to_dict()
        return out


def strict_ancestors(g: MixedGraph, C: Iterable[str]) -> tuple[str, ...]:
    """Ancestors of the component ``C`` that lie outside it."""
    C = set(C)
    return g.sort(ancestors(g, C) - C)


def refutation_certificate(g: MixedGraph, cycle: Sequence[str], identity_trials: int = 20,
                           seed: int = 42, tol: float = 1e-9) -> RefutationCertificate:
    comps = chain_components(g)
    comp = comps.components[comps.component_of[cycle[0]]]
    A = strict_ancestors(g, comp)
    phi = find_sign_flip_counterexample(len(cycle))
    identities = None
    if identity_trials:
        identities = check_determinant_identities(canonical_dag(g).graph, A, cycle,
                                                  identity_trials, seed, tol)
    return RefutationCertificate(tuple(cycle), tuple(comp), A, phi, min_eigenvalue(phi),
                                 min_eigenvalue(sign_flip(phi)), identities)


def decide_strict_causal(g: MixedGraph, identity_trials: int = 20, seed: int = 42,
                         tol: float = 1e-9) -> CausalityVerdict:
    """Strictly causal iff the bidirected part is decomposable."""
    if not is_chain_graph(g):
        raise NotChainGraph("strict causality is decided for chain graphs only")
    report = is_decomposable(g)
    if report.decomposable:
        return CausalityVerdict(STRICTLY_CAUSAL, witness=clique_digraph(g))
    cert = refutation_certificate(g, report.certificate, identity_trials, seed, tol)
    return CausalityVerdict(NOT_STRICTLY_CAUSAL, refutation=cert)


# ---------------------------------------------------------------- index search


@dataclass
class IndexBounds:
    """Bounds on the smallest number of hidden vertices reproducing ``N(g)``.

    ``lower`` is certified by exhausting smaller candidate digraphs, ``upper``
    by a witness that passed :func:`verify_model_equality`.  Both are
    ``math.inf`` for a non-decomposable bidirected part.
    """

    lower: float
    upper: float
    witness: LatentDigraph | None = None
    explored: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def index(self):
        return self.upper if self.exact else None

    def to_dict(self) -> dict:
        def num(x):
            return "inf" if math.isinf(x) else int(x)

        out = {"schema_version": SCHEMA_VERSION, "lower": num(self.lower), "upper": num(self.upper),
               "exact": self.exact, "explored": {str(h): v for h, v in sorted(self.explored.items())}}
        if self.witness is not None:
            dg = self.witness.graph
            out["witness"] = {"nodes": list(dg.vertices), "directed": [list(e) for e in dg.edges],
                              "hidden": {h: list(m) for h, m in self.witness.hidden.items()}}
        return out


def _ci_pattern(d: MixedGraph, observed: Sequence[str]) -> tuple:
    out = []
    for u, v in combinations(observed, 2):
        rest = [w for w in observed if w not in (u, v)]
        for k in range(len(rest) + 1):
            for A in combinations(rest, k):
                if d_separated(d, u, v, A):
                    out.append((u, v, A))
    return tuple(out)


def _hidden_labels(g: MixedGraph, h: int) -> list[str]:
    taken = set(g.vertices)
    labels = []
    i = 1
    while len(labels) < h:
        name = f"h{i}"
        if name not in taken:
            labels.append(name)
        i += 1
    return labels


def candidate_digraphs(g: MixedGraph, h: int, prune: bool = True):
    """Acyclic digraphs on the observed vertices plus ``h`` hidden ones.

    Yielded by increasing edge count, one representative per relabelling of
    the hidden vertices.  With ``prune`` every hidden vertex has at least two
    children: a hidden vertex with fewer can be marginalised away without
    changing the observed model.
    """
    hidden = _hidden_labels(g, h)
    verts = list(g.vertices) + hidden
    n = len(verts)
    pairs = list(combinations(range(n), 2))
    nobs = len(g)
    perms = [dict(zip(range(nobs, n), [nobs + i for i in q])) for q in permutations(range(h))]
    seen = set()
    for k in range(len(pairs) + 1):
        for chosen in combinations(pairs, k):
            for dirs in product((0, 1), repeat=k):
                edges = [(a, b) if flip == 0 else (b, a) for (a, b), flip in zip(chosen, dirs)]
                if prune and h:
                    kids = [0] * n
                    for a, _ in edges:
                        kids[a] += 1
                    if any(kids[x] < 2 for x in range(nobs, n)):
                        continue
                if h > 1:
                    key = min(tuple(sorted((q.get(a, a), q.get(b, b)) for a, b in edges)) for q in perms)
                    if key in seen:
                        continue
                    seen.add(key)
                d = MixedGraph.digraph(verts, [(verts[a], verts[b]) for a, b in edges])
                if not is_acyclic(d):
                    continue
                hidden_map = {x: d.children[x] for x in hidden}
                yield LatentDigraph(d, hidden_map)


def causality_index_search(g: MixedGraph, h_max: int = 2, budget: int = 200000, trials: int = 5,
                           tol: float = 1e-6, seed: int = 42, prune: bool = True) -> IndexBounds:
    """Bounded search for the causality index of a chain graph.

    For ``h = 0, 1, ...`` candidates are screened by comparing their
    d-separation pattern on the observed vertices with that of ``g``;
    survivors are checked with :func:`verify_model_equality`.  If every
    candidate at ``h`` is rejected the lower bound rises to ``h + 1``.  The
    clique digraph supplies the starting upper bound once it passes the same
    check.  ``budget`` caps the number of acyclic candidates examined.
    """
    if not is_chain_graph(g):
        raise NotChainGraph("causality index is defined here for chain graphs")
    if not is_decomposable(g).decomposable:
        return IndexBounds(math.inf, math.inf)
    bounds = IndexBounds(0, math.inf)
    cd = clique_digraph(g)
    if verify_model_equality(g, cd, trials=trials, tol=tol, seed=seed).passed:
        bounds.upper, bounds.witness = len(cd.hidden), cd
    target = separation_triples(g)
    used = 0
    for h in range(h_max + 1):
        if bounds.lower >= bounds.upper:
            break
        stats = {"candidates": 0, "screened_out": 0, "rejected": 0}
        bounds.explored[h] = stats
        found = None
        for cand in candidate_digraphs(g, h, prune):
            used += 1
            if used > budget:
                raise BudgetExceeded(f"candidate budget {budget} exhausted at h={h}", bounds)
            stats["candidates"] += 1
            if _ci_pattern(cand.graph, g.vertices) != target:
                stats["screened_out"] += 1
                continue
            if verify_model_equality(g, cand, trials=trials, tol=tol, seed=seed).passed:
                found = cand
                break
            stats["rejected"] += 1
        if found is not None:
            bounds.lower = h
            if h < bounds.upper:
                bounds.upper, bounds.witness = h, found
            break
        bounds.lower = h + 1
    return bounds


__all__ = [
    "SCHEMA_VERSION", "STRICTLY_CAUSAL", "NOT_STRICTLY_CAUSAL", "sign_flip", "min_eigenvalue",
    "cycle_matrix", "find_sign_flip_counterexample", "gamma_negation", "IdentityReport",
    "verify_determinant_identities", "check_determinant_identities", "RealizationResult",
    "realize_omega", "EqualityReport", "clique_structure", "fit_latent", "verify_model_equality",
    "RefutationCertificate", "CausalityVerdict", "strict_ancestors", "refutation_certificate",
    "decide_strict_causal", "IndexBounds", "causality_index_search",
]
