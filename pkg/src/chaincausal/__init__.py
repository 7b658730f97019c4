"""Linear Gaussian models on chain graphs and their hidden-variable interpretations."""

from .causality import (CausalityVerdict, EqualityReport, IdentityReport, IndexBounds,
                        RealizationResult, RefutationCertificate, causality_index_search,
                        decide_strict_causal, find_sign_flip_counterexample, gamma_negation,
                        realize_omega, sign_flip, verify_determinant_identities,
                        verify_model_equality)
from .errors import ChainCausalError
from .gaussian import (CovMatrix, ParamPoint, cond_cov, marginal, membership_chain,
                       recover_params, sample_params, sigma_of)
from .graph import (LatentDigraph, MixedGraph, ancestors, bidirected_cliques, canonical_dag,
                    chain_components, clique_digraph, is_acyclic, is_chain_graph,
                    is_decomposable, validate)
from .io import read_graph, to_dot
from .separation import Walk, d_connected, d_separated, negation_edge_set, tops
from .treks import (Trek, det_via_treks, enumerate_treks, has_nsi_system, trek_monomial,
                    trek_rule_sigma)

__version__ = "0.1.0"
