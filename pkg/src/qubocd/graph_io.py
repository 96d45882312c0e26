"""Loading, validating and writing weighted undirected graphs.

Two text formats are supported: a whitespace-separated edge list
(``u v [w]`` per line, ``#`` comments) and the undirected subset of GML.
Both loaders normalize to the same :class:`Graph`: node indices are dense
and assigned in order of first appearance, each undirected pair is stored
once with ``i < j``, and repeated pairs have their weights summed.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "Graph",
    "GraphParseError",
    "degree_vector",
    "load_edge_list",
    "load_gml",
    "load_graph",
    "write_edge_list",
    "write_gml",
]


class GraphParseError(ValueError):
    """Raised for malformed or unsupported graph input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph with dense node indices ``0..n-1``.

    ``edges`` holds ``(i, j, w)`` triples with ``i < j`` and ``w > 0``,
    sorted by ``(i, j)``. ``labels[i]`` is the name node ``i`` had in the
    input.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.n)))
        if len(self.labels) != self.n:
            raise ValueError("labels must have one entry per node")
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) is not a normalized pair")
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
            if (i, j) in seen:
                raise ValueError(f"edge ({i}, {j}) stored twice")
            seen.add((i, j))

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[str, str, float]],
        labels: Iterable[str] = (),
    ) -> "Graph":
        """Normalize named ``(u, v, w)`` triples into a Graph.

        Nodes listed in ``labels`` come first (in that order); any other
        node gets the next index on first appearance in ``pairs``.
        """
        index: dict[str, int] = {}
        for name in labels:
            index.setdefault(name, len(index))
        weights: dict[tuple[int, int], float] = {}
        for u, v, w in pairs:
            if u == v:
                raise ValueError(f"self-loop on node {u!r}")
            i = index.setdefault(u, len(index))
            j = index.setdefault(v, len(index))
            key = (i, j) if i < j else (j, i)
            weights[key] = weights.get(key, 0.0) + float(w)
        edges = tuple((i, j, w) for (i, j), w in sorted(weights.items()))
        return cls(n=len(index), edges=edges, labels=tuple(index))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)

    @property
    def two_m(self) -> float:
        """Sum of weighted degrees, i.e. twice the total edge weight."""
        return 2.0 * self.total_weight

    def adjacency(self) -> np.ndarray:
        """Dense symmetric adjacency matrix with a zero diagonal."""
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a

    def unweighted(self) -> "Graph":
        """Copy of the graph with every edge weight set to 1."""
        return Graph(self.n, tuple((i, j, 1.0) for i, j, _ in self.edges), self.labels)


def degree_vector(g: Graph) -> np.ndarray:
    """Weighted degrees ``g_i = sum_j A_ij``; ``g.two_m`` is their sum."""
    deg = np.zeros(g.n)
    for i, j, w in g.edges:
        deg[i] += w
        deg[j] += w
    return deg


def _parse_weight(token: str, line: int) -> float:
    try:
        w = float(token)
    except ValueError:
        raise GraphParseError(f"non-numeric weight {token!r}", line) from None
    if not math.isfinite(w):
        raise GraphParseError(f"non-finite weight {token!r}", line)
    if w <= 0:
        raise GraphParseError(f"non-positive weight {w!r} rejected", line)
    return w


def load_edge_list(text: str) -> Graph:
    """Parse ``u v [w]`` lines into a Graph (missing weights default to 1)."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise GraphParseError(f"expected 'u v [w]', got {len(tokens)} tokens", lineno)
        u, v = tokens[0], tokens[1]
        if u == v:
            raise GraphParseError(f"self-loop on node {u!r} rejected", lineno)
        w = _parse_weight(tokens[2], lineno) if len(tokens) == 3 else 1.0
        pairs.append((u, v, w))
    return Graph.from_pairs(pairs)


_GML_TOKEN = re.compile(r'\s*(?:(\[)|(\])|("(?:[^"\\]|\\.)*")|([^\s\[\]"]+))')


def _gml_tokens(text: str):
    # comment lines start with '#'
    body = "\n".join(
        ("" if ln.lstrip().startswith("#") else ln) for ln in text.splitlines()
    )
    lineno = 1
    pos = 0
    while True:
        m = _GML_TOKEN.match(body, pos)
        if m is None or m.end() == pos:
            if body[pos:].strip():
                raise GraphParseError("unreadable GML input", lineno)
            return
        lineno += body.count("\n", pos, m.end())
        pos = m.end()
        if m.group(1):
            yield "[", None, lineno
        elif m.group(2):
            yield "]", None, lineno
        elif m.group(3) is not None:
            yield "str", m.group(3)[1:-1], lineno
        else:
            yield "atom", m.group(4), lineno


def _gml_parse(text: str) -> list:
    """Parse GML into nested ``[(key, value, line), ...]`` lists."""
    stack: list[list] = [[]]
    key = None
    key_line = 0
    for kind, value, lineno in _gml_tokens(text):
        if key is None:
            if kind == "]":
                if len(stack) == 1:
                    raise GraphParseError("unbalanced ']'", lineno)
                stack.pop()
                continue
            if kind != "atom":
                raise GraphParseError(f"expected a key, got {kind}", lineno)
            key, key_line = value, lineno
            continue
        if kind == "[":
            child: list = []
            stack[-1].append((key, child, key_line))
            stack.append(child)
        elif kind == "]":
            raise GraphParseError(f"key {key!r} has no value", lineno)
        else:
            stack[-1].append((key, value if kind == "str" else _gml_atom(value), key_line))
        key = None
    if key is not None:
        raise GraphParseError(f"key {key!r} has no value", key_line)
    if len(stack) != 1:
        raise GraphParseError("unbalanced '[': missing closing bracket")
    return stack[0]


def _gml_atom(token: str):
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _first(items: list, key: str):
    for k, v, line in items:
        if k == key:
            return v, line
    return None, None


def load_gml(text: str) -> Graph:
    """Parse the undirected, flat subset of GML.

    Edge weights are read from ``value`` or ``weight``; all other
    attributes are ignored. Directed graphs are rejected.
    """
    top = _gml_parse(text)
    graph, gline = _first(top, "graph")
    if not isinstance(graph, list):
        raise GraphParseError("no 'graph [ ... ]' block found", gline)
    directed, dline = _first(graph, "directed")
    if directed not in (None, 0):
        raise GraphParseError("directed graphs are not supported", dline)

    ids: dict[object, str] = {}
    names: list[str] = []
    pairs = []
    for key, value, line in graph:
        if key == "node":
            if not isinstance(value, list):
                raise GraphParseError("node must be a block", line)
            node_id, _ = _first(value, "id")
            if node_id is None:
                raise GraphParseError("node without id", line)
            if node_id in ids:
                raise GraphParseError(f"duplicate node id {node_id!r}", line)
            label, _ = _first(value, "label")
            name = str(label) if label is not None else str(node_id)
            if name in names:
                name = str(node_id)
            ids[node_id] = name
            names.append(name)
        elif key == "edge":
            if not isinstance(value, list):
                raise GraphParseError("edge must be a block", line)
            src, _ = _first(value, "source")
            dst, _ = _first(value, "target")
            if src is None or dst is None:
                raise GraphParseError("edge without source/target", line)
            for end in (src, dst):
                if end not in ids:
                    raise GraphParseError(f"edge references unknown node {end!r}", line)
            if src == dst:
                raise GraphParseError(f"self-loop on node {ids[src]!r} rejected", line)
            w, _ = _first(value, "value")
            if w is None:
                w, _ = _first(value, "weight")
            w = 1.0 if w is None else _parse_weight(str(w), line)
            pairs.append((ids[src], ids[dst], w))
    return Graph.from_pairs(pairs, labels=names)


def load_graph(path: str | Path, fmt: str | None = None, *, weighted: bool = True) -> Graph:
    """Load a graph file; ``fmt`` is ``edgelist`` or ``gml`` (guessed from suffix if None)."""
    path = Path(path)
    if fmt is None:
        fmt = "gml" if path.suffix.lower() == ".gml" else "edgelist"
    text = path.read_text(encoding="utf-8")
    if fmt == "gml":
        g = load_gml(text)
    elif fmt == "edgelist":
        g = load_edge_list(text)
    else:
        raise ValueError(f"unknown graph format {fmt!r}")
    return g if weighted else g.unweighted()


def _check_label(name: str) -> str:
    if not name or any(c.isspace() for c in name) or name.startswith("#"):
        raise ValueError(f"node label {name!r} cannot be written to an edge list")
    return name


def write_edge_list(g: Graph) -> str:
    """Serialize as ``label_u label_v weight`` lines (weights round-trip exactly)."""
    lines = [
        f"{_check_label(g.labels[i])} {_check_label(g.labels[j])} {w!r}"
        for i, j, w in g.edges
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_gml(g: Graph) -> str:
    """Serialize as an undirected GML document with ``value`` edge weights."""

    def quote(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    out = ["graph [", "  directed 0"]
    for i, name in enumerate(g.labels):
        out += ["  node [", f"    id {i}", f"    label {quote(name)}", "  ]"]
    for i, j, w in g.edges:
        out += ["  edge [", f"    source {i}", f"    target {j}", f"    value {w!r}", "  ]"]
    out.append("]")
    return "\n".join(out) + "\n"
