"""Readers and writers: graph text/JSON, DOT export, covariance CSV."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ChainCausalError
from .graph import LatentDigraph, MixedGraph


class ParseError(ChainCausalError, ValueError):
    pass


def parse_graph_text(text: str) -> MixedGraph:
    """Parse the line format ``node X`` / ``dir U V`` / ``bi U V`` with ``#`` comments."""
    nodes, directed, bidirected = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw, args = parts[0], parts[1:]
        if kw == "node" and len(args) == 1:
            nodes.append(args[0])
        elif kw == "dir" and len(args) == 2:
            directed.append(tuple(args))
        elif kw == "bi" and len(args) == 2:
            bidirected.append(tuple(args))
        else:
            raise ParseError(f"line {lineno}: cannot parse {raw.strip()!r}")
    return MixedGraph(nodes, directed, bidirected)


def parse_graph_json(text: str) -> MixedGraph:
    try:
        data = json.loads(text)
        return MixedGraph(data["nodes"], data.get("directed", []), data.get("bidirected", []))
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"bad graph JSON: {exc}") from exc


def read_graph(path) -> MixedGraph:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return parse_graph_json(text)
    return parse_graph_text(text)


def graph_to_text(g: MixedGraph) -> str:
    lines = [f"node {v}" for v in g.vertices]
    lines += [f"dir {u} {v}" for u, v in g.directed]
    lines += [f"bi {u} {v}" for u, v in g.bidirected]
    return "\n".join(lines) + "\n"


def graph_to_dict(g: MixedGraph) -> dict:
    return {
        "nodes": list(g.vertices),
        "directed": [list(e) for e in g.directed],
        "bidirected": [list(e) for e in g.bidirected],
    }


def graph_to_json(g: MixedGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2)


def _q(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g, hidden=(), name: str = "G") -> str:
    """DOT source.  Observed vertices are shaded, hidden ones unfilled.

    Accepts a :class:`MixedGraph` or a :class:`LatentDigraph`.
    """
    if isinstance(g, LatentDigraph):
        g, hidden = g.graph, g.hidden
    hidden = set(hidden)
    lines = [f"digraph {_q(name)} {{"]
    for v in g.vertices:
        if v in hidden:
            lines.append(f"  {_q(v)} [shape=circle, style=solid];")
        else:
            lines.append(f"  {_q(v)} [shape=circle, style=filled, fillcolor=lightgray];")
    for u, v in g.edges:
        lines.append(f"  {_q(u)} -> {_q(v)};")
    for u, v in g.bi_edges:
        lines.append(f"  {_q(u)} -> {_q(v)} [dir=both, arrowhead=normal, arrowtail=normal];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def read_matrix_csv(path_or_text, *, is_text: bool = False):
    """Read a labelled symmetric matrix; returns ``(labels, ndarray)``."""
    text = path_or_text if is_text else Path(path_or_text).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty matrix CSV")
    labels = [c.strip() for c in rows[0]]
    try:
        mat = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ParseError(f"non-numeric matrix entry: {exc}") from exc
    if mat.shape != (len(labels), len(labels)):
        raise ParseError(f"matrix shape {mat.shape} does not match {len(labels)} labels")
    return labels, mat


def matrix_to_csv(labels, mat) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(labels)
    for row in np.asarray(mat, dtype=float):
        w.writerow([format(float(x), ".17g") for x in row])
    return buf.getvalue()
