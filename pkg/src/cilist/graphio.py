"""Reading and writing graph files.

Text format, one declaration per line, ``#`` starts a comment::

    node A
    latent U
    edge A -> B
    edge A <-> C
    order A B C

Edges may only reference nodes declared on an earlier line. The JSON form is an object with
keys ``nodes``, ``latents``, ``directed``, ``bidirected`` and ``order``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .graph import CausalGraph, GraphError, VariableOrder

FORMAT_VERSION = "1"


class GraphParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message} at line {line}" if line is not None else message)


@dataclass(frozen=True)
class GraphFile:
    graph: CausalGraph
    order: tuple[str, ...] | None = None

    def variable_order(self, graph: CausalGraph | None = None) -> VariableOrder:
        """Embedded order if present, otherwise the default topological order."""
        g = self.graph if graph is None else graph
        if self.order is None:
            return g.default_order()
        return g.order_from_names(self.order)


def parse_text(text: str) -> GraphFile:
    names: list[str] = []
    latents: list[int] = []
    index: dict[str, int] = {}
    directed: list[tuple[int, int]] = []
    bidirected: list[tuple[int, int]] = []
    seen_edges: set[tuple[str, int, int]] = set()
    order: tuple[str, ...] | None = None
    edge_lines: dict[tuple[int, int], int] = {}

    def lookup(name: str, lineno: int) -> int:
        if name not in index:
            raise GraphParseError(f"unknown node {name!r}", lineno)
        return index[name]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw = parts[0]
        if kw in ("node", "latent"):
            if len(parts) != 2:
                raise GraphParseError(f"expected '{kw} <name>'", lineno)
            name = parts[1]
            if name in index:
                raise GraphParseError(f"duplicate declaration of {name!r}", lineno)
            index[name] = len(names)
            if kw == "latent":
                latents.append(len(names))
            names.append(name)
        elif kw == "edge":
            if len(parts) != 4 or parts[2] not in ("->", "<->"):
                raise GraphParseError("expected 'edge <a> -> <b>' or 'edge <a> <-> <b>'", lineno)
            a = lookup(parts[1], lineno)
            b = lookup(parts[3], lineno)
            if a == b:
                raise GraphParseError("self-loop", lineno)
            if parts[2] == "->":
                key = ("->", a, b)
                target = directed
            else:
                key = ("<->", min(a, b), max(a, b))
                target = bidirected
            if key in seen_edges:
                raise GraphParseError(f"duplicate edge {parts[1]} {parts[2]} {parts[3]}", lineno)
            seen_edges.add(key)
            target.append((a, b))
            if parts[2] == "->":
                edge_lines[(a, b)] = lineno
        elif kw == "order":
            if order is not None:
                raise GraphParseError("duplicate order declaration", lineno)
            for nm in parts[1:]:
                lookup(nm, lineno)
            order = tuple(parts[1:])
        else:
            raise GraphParseError(f"unknown keyword {kw!r}", lineno)

    return _build(names, directed, bidirected, latents, order, edge_lines)


def _build(names, directed, bidirected, latents, order, edge_lines=None) -> GraphFile:
    try:
        g = CausalGraph(names, directed, bidirected, latents)
    except GraphError as exc:
        if "cycle" in str(exc) and edge_lines:
            line = max(edge_lines.values())
            raise GraphParseError(f"directed cycle ({exc})", line) from None
        raise GraphParseError(str(exc)) from None
    if order is not None:
        for nm in order:
            if g.is_latent(g.index(nm)):
                raise GraphParseError(f"latent node {nm!r} in order")
    return GraphFile(g, order)


def parse_json(text: str) -> GraphFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict):
        raise GraphParseError("top-level JSON value must be an object")
    nodes = list(doc.get("nodes", []))
    lat_names = list(doc.get("latents", []))
    names = nodes + [u for u in lat_names if u not in nodes]
    if len(set(names)) != len(names):
        raise GraphParseError("duplicate node declaration")
    index = {nm: i for i, nm in enumerate(names)}

    def pairs(key):
        out = []
        for pair in doc.get(key, []):
            if len(pair) != 2:
                raise GraphParseError(f"{key} entries must be pairs")
            for nm in pair:
                if nm not in index:
                    raise GraphParseError(f"unknown node {nm!r} in {key}")
            out.append((index[pair[0]], index[pair[1]]))
        return out

    order = doc.get("order")
    if order is not None:
        for nm in order:
            if nm not in index:
                raise GraphParseError(f"unknown node {nm!r} in order")
        order = tuple(order)
    return _build(
        names, pairs("directed"), pairs("bidirected"), [index[u] for u in lat_names], order
    )


def read_graph(path: str | Path) -> GraphFile:
    """Read a graph file; ``.json`` files use the JSON schema, others the text format."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphParseError(f"cannot read {p}: {exc.strerror}") from None
    if p.suffix.lower() == ".json":
        return parse_json(text)
    return parse_text(text)


def to_text(g: CausalGraph, order: tuple[str, ...] | list[str] | None = None) -> str:
    lines = []
    for i, name in enumerate(g.names):
        lines.append(f"{'latent' if g.is_latent(i) else 'node'} {name}")
    for a, b in g.directed_edges:
        lines.append(f"edge {g.names[a]} -> {g.names[b]}")
    for a, b in g.bidirected_edges:
        lines.append(f"edge {g.names[a]} <-> {g.names[b]}")
    if order is not None:
        lines.append("order " + " ".join(order))
    return "\n".join(lines) + "\n"


def to_json(g: CausalGraph, order=None) -> str:
    doc = {
        "nodes": [nm for i, nm in enumerate(g.names) if not g.is_latent(i)],
        "latents": [nm for i, nm in enumerate(g.names) if g.is_latent(i)],
        "directed": [[g.names[a], g.names[b]] for a, b in g.directed_edges],
        "bidirected": [[g.names[a], g.names[b]] for a, b in g.bidirected_edges],
    }
    if order is not None:
        doc["order"] = list(order)
    return json.dumps(doc, indent=1)


def load_fixture(name: str) -> GraphFile:
    """Load one of the bundled graphs (``g1``, ``g1_observed``, ``g2``, ``sachs``, ``fig2``)."""
    ref = resources.files("cilist") / "fixtures" / f"{name}.graph"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return parse_text(ref.read_text(encoding="utf-8"))


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("cilist") / "fixtures" / f"{name}.graph"))
