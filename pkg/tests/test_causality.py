import json
import math

import numpy as np
import pytest
from hypothesis import given, settings

from chaincausal.causality import (NOT_STRICTLY_CAUSAL, STRICTLY_CAUSAL, candidate_digraphs,
                                   causality_index_search, check_determinant_identities,
                                   clique_structure, cycle_matrix, decide_strict_causal,
                                   find_sign_flip_counterexample, fit_latent, gamma_negation,
                                   min_eigenvalue, realize_omega, sign_flip, strict_ancestors,
                                   verify_determinant_identities, verify_model_equality)
from chaincausal.errors import (BadQuery, ConvergenceFailure, NotChainGraph, NotDecomposable,
                                NotPositiveDefinite, SupportViolation)
from chaincausal.gaussian import CovMatrix, marginal, sample_params, sigma_of
from chaincausal.graph import (LatentDigraph, MixedGraph, bidirected_cliques, canonical_dag,
                               clique_digraph, is_chordless_cycle, is_decomposable)
from chaincausal.separation import negation_edge_set

from conftest import bicycle, chain_graphs, latent_pair, bow_pair, five_dag, random_chain_graph, triangle


# -------------------------------------------------------------------- sign flip


def test_sign_flip_basics():
    assert np.array_equal(sign_flip(np.eye(3)), np.eye(3))
    m = np.arange(16.0).reshape(4, 4)
    m = m + m.T
    f = sign_flip(m)
    assert f[0, 1] == -m[0, 1] and f[1, 0] == -m[1, 0]
    assert np.array_equal(sign_flip(f), m)
    assert np.array_equal(np.diag(f), np.diag(m))
    with pytest.raises(ValueError):
        sign_flip(np.eye(1))


def test_candidate_fixture_from_the_notes():
    phi = cycle_matrix([-0.6, 0.6, 0.6, 0.6])
    assert min_eigenvalue(phi) > 0
    assert min_eigenvalue(sign_flip(phi)) < 0


@pytest.mark.parametrize("p", [4, 5, 6, 7, 8])
def test_counterexample_search(p):
    phi = find_sign_flip_counterexample(p)
    assert min_eigenvalue(phi) > 0.01
    assert min_eigenvalue(sign_flip(phi)) <= -0.05
    off = np.ones((p, p), dtype=bool)
    for i in range(p):
        off[i, i] = off[i, (i + 1) % p] = off[(i + 1) % p, i] = False
    assert np.all(phi[off] == 0)
    assert np.allclose(np.diag(phi), 1)


def test_counterexample_equal_weight_spectrum():
    # unit diagonal, weights of magnitude a: spectrum 1 - 2a cos(pi/p) before, 1 - 2a after
    phi = find_sign_flip_counterexample(4)
    a = abs(phi[0, 1])
    assert min_eigenvalue(phi) == pytest.approx(1 - 2 * a * math.cos(math.pi / 4))
    assert min_eigenvalue(sign_flip(phi)) == pytest.approx(1 - 2 * a)


def test_counterexample_rejects_short_cycles():
    with pytest.raises(ValueError):
        find_sign_flip_counterexample(3)


# --------------------------------------------------------------------- negation


def test_gamma_negation_four_cycle():
    d = canonical_dag(bicycle(4)).graph
    p = sample_params(d, 1)
    q = gamma_negation(d, (), "1", "2", p)
    diff = np.argwhere(q.lam != p.lam)
    assert [tuple(d.vertices[k] for k in ij) for ij in diff] == [("h_1_2", "1")]
    assert q.lam[d.index["h_1_2"], d.index["1"]] == -p.lam[d.index["h_1_2"], d.index["1"]]
    assert np.array_equal(q.omega, p.omega)


def test_gamma_negation_is_identity_without_tops():
    g = MixedGraph.digraph(["1", "2", "3"], [("3", "2")])
    p = sample_params(g, 3)
    assert gamma_negation(g, (), "1", "2", p).allclose(p, atol=0)
    with pytest.raises(BadQuery):
        gamma_negation(g, ("1",), "1", "2", p)


def test_gamma_negation_touches_exactly_the_edge_set(rng):
    for _ in range(15):
        g = random_chain_graph(rng, 5)
        d = canonical_dag(g).graph
        u, v = g.vertices[:2]
        A = tuple(g.vertices[2:3])
        p = sample_params(d, int(rng.integers(1000)))
        q = gamma_negation(d, A, u, v, p)
        changed = {(d.vertices[i], d.vertices[j]) for i, j in np.argwhere(q.lam != p.lam)}
        assert changed == set(negation_edge_set(d, A, u, v))
        assert np.all((q.lam != 0) == (p.lam != 0))


# ------------------------------------------------------------ determinant identities


@pytest.mark.parametrize("p", [4, 5])
def test_identities_on_cycle_canonical_dag(p):
    d = canonical_dag(bicycle(p)).graph
    cycle = [str(i) for i in range(1, p + 1)]
    rep = check_determinant_identities(d, (), cycle, trials=200, seed=42, tol=1e-9)
    assert rep.passed and rep.points == 200
    assert rep.negated_edges == (("h_1_2", "1"),)


def test_identities_on_five_cycle_clique_digraph():
    d = clique_digraph(bicycle(5)).graph
    cycle = [str(i) for i in range(1, 6)]
    assert check_determinant_identities(d, (), cycle, trials=50).passed


def test_identities_with_nonempty_ancestor_set():
    # parents feeding the cycle put A = {0, 9}
    names = ["0", "9", "1", "2", "3", "4"]
    g = MixedGraph(names, [("0", "1"), ("9", "3"), ("0", "2")],
                   [("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")])
    verdict = decide_strict_causal(g, identity_trials=50)
    cert = verdict.refutation
    assert cert.A == ("0", "9")
    assert cert.identities.passed
    s = sigma_of(canonical_dag(g).graph, sample_params(canonical_dag(g).graph, 5))
    assert s.det(cert.A, cert.A) != 1.0  # not the empty-set case


def test_identity_report_accepts_single_point():
    d = canonical_dag(bicycle(4)).graph
    rep = verify_determinant_identities(d, (), list("1234"), sample_params(d, 9))
    assert rep.points == 1 and rep.passed
    assert rep.max_error_AA == 0.0  # det of the empty block is 1 on both sides


# ------------------------------------------------------------------- realization


def test_realize_diagonal_omega():
    g = MixedGraph(["1", "2", "3"], [], [("1", "2")])
    om = np.diag([1.0, 2.0, 3.0])
    res = realize_omega(g, bidirected_cliques(g), om)
    assert np.all(res.gamma21 == 0)
    assert np.allclose(res.delta[:3], [1.0, 2.0, 3.0])
    assert res.residual == 0


def test_realize_single_edge_closed_form():
    # gamma_h1 = w12 / c, gamma_h2 = c, delta_1 = w11 - w12^2 / c^2, delta_2 = w22 - c^2
    g = MixedGraph(["1", "2"], [], [("1", "2")])
    om = np.array([[2.0, 0.8], [0.8, 1.5]])
    c = 0.9
    assert om[0, 1] ** 2 / om[0, 0] < c * c < om[1, 1]
    gamma = np.array([[om[0, 1] / c, c]])
    delta = np.array([om[0, 0] - om[0, 1] ** 2 / c ** 2, om[1, 1] - c ** 2])
    assert np.allclose(np.diag(delta) + gamma.T @ gamma, om, atol=1e-15)
    res = realize_omega(g, [("1", "2")], om)
    assert res.residual < 1e-12
    assert np.all(res.delta > 0)


def _random_pd_on(g, rng):
    n = len(g)
    for _ in range(100):
        om = np.diag(rng.uniform(0.5, 1.5, n))
        for u, v in g.bi_edges:
            i, j = g.index[u], g.index[v]
            om[i, j] = om[j, i] = rng.uniform(-0.9, 0.9)
        if min_eigenvalue(om) > 0.02:
            return om
    raise AssertionError("no PD sample")


def test_realize_random_decomposable_patterns(rng):
    done = 0
    while done < 25:
        g = random_chain_graph(rng, 5, p_bi=0.7)
        if not is_decomposable(g).decomposable or not g.bi_edges:
            continue
        om = _random_pd_on(g, rng)
        res = realize_omega(g, bidirected_cliques(g), om)
        assert res.residual <= 1e-6
        assert np.all(res.delta > 0)
        for row, clique in enumerate(res.cliques):
            outside = [g.index[v] for v in g.vertices if v not in clique]
            assert np.all(res.gamma21[row, outside] == 0)
        assert np.allclose(res.reconstruct(), om, atol=1e-9)
        done += 1


def test_maximal_cliques_alone_can_fail():
    # one factor on a triangle forces the product of correlations to be positive
    g = triangle()
    om = np.array([[1, -0.4, -0.4], [-0.4, 1, -0.4], [-0.4, -0.4, 1.0]])
    assert min_eigenvalue(om) > 0
    with pytest.raises(ConvergenceFailure) as err:
        realize_omega(g, [("1", "2", "3")], om)
    assert err.value.best_residual > 1e-6
    assert realize_omega(g, bidirected_cliques(g), om).residual < 1e-9


def test_realize_errors():
    c4 = bicycle(4)
    om = np.eye(4)
    with pytest.raises(NotDecomposable):
        realize_omega(c4, bidirected_cliques(c4), om)
    g = MixedGraph(["1", "2"], [], [])
    with pytest.raises(SupportViolation):
        realize_omega(g, [], [[1.0, 0.1], [0.1, 1.0]])
    g2 = MixedGraph(["1", "2"], [], [("1", "2")])
    with pytest.raises(NotPositiveDefinite):
        realize_omega(g2, [("1", "2")], [[1.0, 2.0], [2.0, 1.0]])


def test_certificate_matrix_is_not_realizable_on_the_cycle():
    c4 = bicycle(4)
    phi = find_sign_flip_counterexample(4)
    with pytest.raises(ConvergenceFailure):
        realize_omega(c4, bidirected_cliques(c4), phi, strict=False)


# ----------------------------------------------------------------- model equality


def test_bow_pair_equals_latent_pair():
    d = LatentDigraph(latent_pair(), {"5": ("3", "4")})
    rep = verify_model_equality(bow_pair(), d)
    assert rep.passed
    assert max(rep.reproduction_residuals) < 1e-9
    assert "not a proof" in rep.to_dict()["note"]


def test_extra_hidden_parent_gives_same_model():
    g = latent_pair()
    d2 = MixedGraph.digraph(list(g.vertices) + ["6"], list(g.edges) + [("6", "3"), ("6", "4")])
    d = LatentDigraph(d2, {"5": ("3", "4"), "6": ("3", "4")})
    assert clique_structure(bow_pair(), d) == [("3", "4"), ("3", "4")]
    assert verify_model_equality(bow_pair(), d, trials=10).passed


@given(chain_graphs(6))
@settings(max_examples=25, deadline=None)
def test_clique_digraph_reproduces_decomposable_models(g):
    if not is_decomposable(g).decomposable:
        return
    rep = verify_model_equality(g, clique_digraph(g), trials=5)
    assert rep.passed, rep.to_dict()


def test_four_cycle_against_its_canonical_dag():
    c4 = bicycle(4)
    phi = CovMatrix(c4.vertices, find_sign_flip_counterexample(4))
    rep = verify_model_equality(c4, canonical_dag(c4), trials=5, extra=[phi])
    assert rep.containment_passed
    assert rep.reproduction_residuals[-1] > 1e-3
    assert not rep.reproduction_passed


def test_generic_fit_on_non_clique_witness():
    # hidden vertex with an observed parent: not of clique shape, so the generic fit runs
    g = MixedGraph(["1", "2", "3"], [("1", "2"), ("1", "3")], [("2", "3")])
    d = LatentDigraph(MixedGraph.digraph(["1", "2", "3", "h"], [("1", "h"), ("h", "2"), ("h", "3"), ("1", "2"), ("1", "3")]), {"h": ()})
    assert clique_structure(g, d) is None
    target = sigma_of(d.graph, sample_params(d.graph, 1))
    err, _ = fit_latent(d, marginal(target, g.vertices), seed=0)
    assert err < 1e-8


def test_equality_requires_chain_graph():
    g = MixedGraph(["1", "2"], [("1", "2")], [("1", "2")])
    with pytest.raises(NotChainGraph):
        verify_model_equality(g, canonical_dag(MixedGraph(["1", "2"], [], [("1", "2")])))


# ----------------------------------------------------------------------- decide


def test_decide_examples():
    v = decide_strict_causal(bow_pair())
    assert v.decision == STRICTLY_CAUSAL and v.refutation is None
    assert len(v.witness.hidden) == 1
    v = decide_strict_causal(bicycle(4))
    assert v.decision == NOT_STRICTLY_CAUSAL and v.witness is None
    assert v.refutation.cycle == ("1", "2", "3", "4") and v.refutation.A == ()
    assert decide_strict_causal(triangle()).strictly_causal
    with pytest.raises(NotChainGraph):
        decide_strict_causal(MixedGraph(["1", "2"], [("1", "2")], [("1", "2")]))


@given(chain_graphs(7))
@settings(max_examples=60, deadline=None)
def test_decision_matches_decomposability(g):
    v = decide_strict_causal(g, identity_trials=3)
    assert v.strictly_causal == is_decomposable(g).decomposable
    assert (v.witness is None) != (v.refutation is None)
    if v.refutation is not None:
        cert = v.refutation
        assert is_chordless_cycle(g, cert.cycle)
        assert cert.phi_min_eigenvalue > 0 and cert.phi_flipped_min_eigenvalue < 0
        assert not set(cert.A) & set(cert.component)
        assert cert.identities.passed


def test_strict_ancestors_exclude_component():
    g = MixedGraph(["a", "b", "c"], [("a", "b")], [("b", "c")])
    assert strict_ancestors(g, ("b", "c")) == ("a",)


def test_verdict_json_is_stable():
    a = json.dumps(decide_strict_causal(bicycle(5)).to_dict(), sort_keys=True)
    b = json.dumps(decide_strict_causal(bicycle(5)).to_dict(), sort_keys=True)
    assert a == b
    data = json.loads(a)
    assert data["schema_version"] == 1 and data["decision"] == "NotStrictlyCausal"
    assert len(data["refutation"]["phi"]) == 5


# ------------------------------------------------------------------ index search


def test_index_bow_pair():
    b = causality_index_search(bow_pair())
    assert (b.lower, b.upper) == (1, 1) and b.exact and b.index == 1
    assert b.explored[0]["candidates"] == 543 == b.explored[0]["screened_out"]
    assert len(b.witness.hidden) == 1


def test_index_non_decomposable_is_infinite():
    b = causality_index_search(bicycle(4))
    assert math.isinf(b.lower) and math.isinf(b.upper)
    assert b.to_dict()["upper"] == "inf"


def test_index_triangle_bounded_by_clique_count():
    b = causality_index_search(triangle(), h_max=1)
    assert b.upper <= len(bidirected_cliques(triangle()))
    assert b.exact and b.index == 0  # a complete DAG already covers every covariance


def test_index_pruned_and_unpruned_agree_on_small_graphs():
    for g in [bow_pair(), MixedGraph(["1", "2", "3"], [("1", "2")], [("2", "3")])]:
        a = causality_index_search(g, h_max=1, prune=True)
        b = causality_index_search(g, h_max=1, prune=False)
        assert (a.lower, a.upper) == (b.lower, b.upper)


def test_candidate_enumeration_counts():
    g = MixedGraph(["1", "2", "3"])
    # labelled DAGs on 3 vertices
    assert sum(1 for _ in candidate_digraphs(g, 0)) == 25
    assert sum(1 for _ in candidate_digraphs(MixedGraph(["1", "2", "3", "4"]), 0)) == 543
    for cand in candidate_digraphs(MixedGraph(["1", "2"]), 1):
        assert len(cand.graph.children["h1"]) >= 2


def test_index_budget():
    from chaincausal.errors import BudgetExceeded
    with pytest.raises(BudgetExceeded) as err:
        causality_index_search(bow_pair(), budget=10)
    assert err.value.partial is not None and err.value.partial.upper == 1
