"""Command-line front end.

Every subcommand builds a JSON-ready dict from library calls; ``--format
text`` renders the same dict for reading.  Exit codes: 0 success or a true
verdict, 1 a false verdict, 2 usage or input errors, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import causality as cz
from . import graph as gc
from .errors import (BadQuery, BudgetExceeded, ConvergenceFailure, InvalidGraph,
                     NotAcyclic, NotADigraph, NotChainGraph, NotPositiveDefinite,
                     SearchFailure, SingularBlock, SizeMismatch, UnknownVertex, CapExceeded)
from .gaussian import CovMatrix, membership_chain
from .io import ParseError, read_graph, read_matrix_csv, to_dot
from .separation import d_connected, negation_edge_set, tops
from .treks import det_via_treks, enumerate_treks, has_nsi_system, trek_monomial

OK, FALSE, USAGE, NUMERIC = 0, 1, 2, 3


class Result:
    def __init__(self, payload: dict, code: int = OK, text: str | None = None, artifact: str | None = None):
        self.payload = payload
        self.code = code
        self.text = text
        self.artifact = artifact  # DOT or JSON written by --out


def _labels(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [x for x in raw.replace(",", " ").split() if x]


def _load(args) -> gc.MixedGraph:
    if not args.graph:
        raise _Usage("--graph is required for this command")
    g = read_graph(args.graph)
    report = gc.validate(g)
    if report.duplicate_vertices or report.unknown_vertices or report.self_loops:
        raise InvalidGraph("; ".join(report.problems()))
    return g


class _Usage(Exception):
    pass


def _render(payload, indent=0) -> str:
    pad = "  " * indent
    lines = []
    for key, val in payload.items():
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_render(val, indent + 1))
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            lines.append(f"{pad}{key}:")
            for item in val:
                lines.append(_render(item, indent + 1))
                lines.append("")
        else:
            lines.append(f"{pad}{key}: {_short(val)}")
    return "\n".join(x for x in lines if x is not None).rstrip("\n")


def _short(val) -> str:
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(_short(v) for v in val) + "]"
    if isinstance(val, float):
        return f"{val:.6g}"
    return str(val)


# ------------------------------------------------------------------ commands


def cmd_validate(args) -> Result:
    g = read_graph(args.graph) if args.graph else None
    if g is None:
        raise _Usage("--graph is required for this command")
    report = gc.validate(g)
    payload = report.to_dict()
    chain = report.ok and report.acyclic and report.simple and gc.is_chain_graph(g)
    payload["chain_graph"] = chain
    return Result(payload, OK if report.ok and chain else FALSE)


def cmd_analyze(args) -> Result:
    g = _load(args)
    dec = gc.is_decomposable(g)
    payload = {
        "nodes": list(g.vertices),
        "directed": [list(e) for e in g.edges],
        "bidirected": [list(e) for e in g.bi_edges],
        "acyclic": gc.is_acyclic(g),
        "chain_graph": gc.is_chain_graph(g),
        "decomposable": dec.decomposable,
        "cliques": [list(c) for c in gc.bidirected_cliques(g)],
    }
    if payload["chain_graph"]:
        payload["chain_components"] = [list(c) for c in gc.chain_components(g).components]
    if dec.decomposable:
        payload["elimination_ordering"] = list(dec.elimination_ordering)
    else:
        payload["chordless_cycle"] = list(dec.certificate)
    return Result(payload)


def cmd_decide(args) -> Result:
    g = _load(args)
    verdict = cz.decide_strict_causal(g, identity_trials=args.trials, seed=args.seed)
    payload = verdict.to_dict()
    if verdict.strictly_causal:
        artifact = to_dot(verdict.witness, name="witness")
        text = f"decision: {verdict.decision}\n\n{artifact}"
        return Result(payload, OK, text, artifact)
    artifact = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    text = f"decision: {verdict.decision}\n\n{artifact}"
    return Result(payload, FALSE, text, artifact)


def cmd_treks(args) -> Result:
    g = _load(args)
    if not args.source or not args.target:
        raise _Usage("treks needs --from and --to")
    found = enumerate_treks(g, args.source, args.target, cap=args.cap)
    items = [{"trek": str(t), "top": t.top, "monomial": str(trek_monomial(t))} for t in found]
    payload = {"from": args.source, "to": args.target, "count": len(items), "treks": items}
    text = f"{len(items)} treks from {args.source} to {args.target}\n"
    text += "\n".join(f"  {i['trek']:<30}  {i['monomial']}" for i in items)
    return Result(payload, OK, text)


def cmd_det(args) -> Result:
    g = _load(args)
    X, Y = _labels(args.rows), _labels(args.cols)
    if not X or len(X) != len(Y):
        raise _Usage("det needs --rows and --cols of equal non-zero length")
    poly = det_via_treks(g, X, Y, cap=args.cap)
    payload = {"rows": X, "cols": Y, "determinant": str(poly), "terms": len(poly),
               "has_nsi_system": has_nsi_system(g, X, Y, cap=args.cap)}
    return Result(payload)


def cmd_separate(args) -> Result:
    g = _load(args)
    if not args.u or not args.v:
        raise _Usage("separate needs --u and --v")
    A = _labels(args.given)
    connected, walk = d_connected(g, args.u, args.v, A)
    payload = {"u": args.u, "v": args.v, "given": A, "separated": not connected,
               "witness": None if walk is None else str(walk)}
    if g.is_digraph and connected:
        payload["tops"] = list(g.sort(tops(g, args.u, args.v, A)))
        payload["negation_edges"] = [list(e) for e in negation_edge_set(g, A, args.u, args.v)]
    return Result(payload, OK if not connected else FALSE)


def cmd_membership(args) -> Result:
    g = _load(args)
    if not args.matrix:
        raise _Usage("membership needs --matrix")
    labels, mat = read_matrix_csv(args.matrix)
    s = CovMatrix(labels, mat)
    res = membership_chain(g, s, tol=args.tol)
    payload = {"member": res.member, "tol": args.tol,
               "violations": [{"u": u, "v": v, "given": list(A), "partial_correlation": float(x)}
                              for u, v, A, x in res.violations]}
    return Result(payload, OK if res.member else FALSE)


def cmd_verify_equality(args) -> Result:
    g = _load(args)
    if args.witness:
        wg = read_graph(args.witness)
        hidden = {h: wg.children[h] for h in wg.vertices if h not in g.index}
        d = gc.LatentDigraph(wg, hidden)
    else:
        d = gc.clique_digraph(g)
    extra = []
    if args.matrix:
        labels, mat = read_matrix_csv(args.matrix)
        extra.append(CovMatrix(labels, mat))
    report = cz.verify_model_equality(g, d, trials=args.trials, tol=args.tol, seed=args.seed, extra=extra)
    payload = report.to_dict()
    payload["schema_version"] = cz.SCHEMA_VERSION
    return Result(payload, OK if report.passed else FALSE)


def cmd_negate_demo(args) -> Result:
    p = args.p
    phi = cz.find_sign_flip_counterexample(p)
    names = [str(i) for i in range(1, p + 1)]
    g = gc.MixedGraph(names, [], [(names[i], names[(i + 1) % p]) for i in range(p)])
    d = gc.canonical_dag(g).graph
    rep = cz.check_determinant_identities(d, (), names, trials=args.trials, seed=args.seed, tol=args.tol)
    payload = {
        "schema_version": cz.SCHEMA_VERSION,
        "p": p,
        "phi": phi.tolist(),
        "phi_min_eigenvalue": cz.min_eigenvalue(phi),
        "phi_flipped_min_eigenvalue": cz.min_eigenvalue(cz.sign_flip(phi)),
        "identities": rep.to_dict(),
    }
    return Result(payload, OK if rep.passed else FALSE)


def cmd_index(args) -> Result:
    g = _load(args)
    try:
        bounds = cz.causality_index_search(g, h_max=args.h_max, budget=args.budget,
                                           trials=args.trials, tol=args.tol, seed=args.seed)
    except BudgetExceeded as exc:
        payload = exc.partial.to_dict() if exc.partial is not None else {}
        payload["error"] = str(exc)
        return Result(payload, NUMERIC)
    payload = bounds.to_dict()
    # an infinite index is the same false verdict as decide; open bounds also count as false
    finite = bounds.exact and bounds.upper != float("inf")
    return Result(payload, OK if finite else FALSE)


COMMANDS = {
    "validate": (cmd_validate, "report structural problems and the chain-graph property"),
    "analyze": (cmd_analyze, "components, cliques and decomposability"),
    "decide": (cmd_decide, "decide strict Gaussian causality"),
    "treks": (cmd_treks, "list treks between two vertices of a digraph"),
    "det": (cmd_det, "subdeterminant of the covariance as a trek-system polynomial"),
    "separate": (cmd_separate, "d-connection query"),
    "membership": (cmd_membership, "check a covariance matrix against the chain-graph model"),
    "verify-equality": (cmd_verify_equality, "sample-based check of model equality with a hidden-variable digraph"),
    "negate-demo": (cmd_negate_demo, "sign-flip counterexample and determinant identities on a p-cycle"),
    "index": (cmd_index, "bounded search for the causality index"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", metavar="PATH", help="graph file (text or JSON)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--out", metavar="PATH", help="write the report (or DOT/certificate for decide) here")

    parser = argparse.ArgumentParser(prog="chaincausal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}
    for name, (_, help_text) in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=help_text)
    parsers["treks"].add_argument("--from", dest="source")
    parsers["treks"].add_argument("--to", dest="target")
    parsers["treks"].add_argument("--cap", type=int, default=10**6)
    parsers["det"].add_argument("--rows", help="comma separated row labels")
    parsers["det"].add_argument("--cols", help="comma separated column labels")
    parsers["det"].add_argument("--cap", type=int, default=10**6)
    parsers["separate"].add_argument("--u")
    parsers["separate"].add_argument("--v")
    parsers["separate"].add_argument("--given", default="", help="comma separated conditioning set")
    parsers["membership"].add_argument("--matrix", metavar="CSV")
    parsers["verify-equality"].add_argument("--witness", metavar="PATH",
                                            help="digraph whose extra vertices are hidden (default: clique digraph)")
    parsers["verify-equality"].add_argument("--matrix", metavar="CSV", help="extra covariance to reproduce")
    parsers["negate-demo"].add_argument("--p", type=int, default=4)
    parsers["index"].add_argument("--h-max", type=int, default=2)
    parsers["index"].add_argument("--budget", type=int, default=200000)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else OK
    func = COMMANDS[args.command][0]
    try:
        result = func(args)
    except (_Usage, ParseError, InvalidGraph, UnknownVertex, BadQuery, SizeMismatch,
            NotADigraph, NotAcyclic, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return USAGE
    except NotChainGraph as exc:
        print(f"not a chain graph: {exc}", file=stderr)
        return FALSE
    except (ConvergenceFailure, SingularBlock, NotPositiveDefinite, SearchFailure,
            BudgetExceeded, CapExceeded, ValueError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return NUMERIC

    report = json.dumps(result.payload, indent=2, sort_keys=True) + "\n"
    if args.format == "json":
        shown = report
    else:
        shown = (result.text if result.text is not None else _render(result.payload)) + "\n"
    if args.out:
        Path(args.out).write_text(result.artifact if result.artifact is not None else report,
                                  encoding="utf-8")
    stdout.write(shown)
    return result.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
