"""Mixed graphs (DAG / CPDAG / PAG), edge tokens, and (de)serialization."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

FORMAT_VERSION = 1


class Mark(str, enum.Enum):
    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"


# integer codes used by the endpoint matrices inside the discovery modules
NONE, TAIL, ARROW, CIRCLE = 0, 1, 2, 3
_CODE_TO_MARK = {TAIL: Mark.TAIL, ARROW: Mark.ARROW, CIRCLE: Mark.CIRCLE}
_MARK_TO_CODE = {v: k for k, v in _CODE_TO_MARK.items()}


class GraphError(ValueError):
    """Malformed graph or graph document."""


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    mark_a: Mark
    mark_b: Mark
    weight: Optional[float] = None


class EdgeToken(NamedTuple):
    kind: str  # "directed" | "undirected" | "bidirected"
    a: str
    b: str

    def __str__(self) -> str:
        sym = {"directed": "->", "undirected": "--", "bidirected": "<->"}[self.kind]
        return f"{self.a} {sym} {self.b}"


class MixedGraph:
    """Immutable graph whose edges carry an endpoint mark at each end.

    Edges are stored once per unordered pair with ``a < b``; marks are
    swapped on the way in so ``Edge("y", "x", TAIL, ARROW)`` is stored as
    ``Edge("x", "y", ARROW, TAIL)``.
    """

    __slots__ = ("_nodes", "_edges")

    def __init__(self, nodes: Iterable[str], edges: Iterable[Edge] = ()):
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate node names")
        known = set(nodes)
        store: dict[tuple[str, str], Edge] = {}
        for e in edges:
            if e.a == e.b:
                raise GraphError(f"self-loop on {e.a!r}")
            if e.a not in known or e.b not in known:
                raise GraphError(f"edge {e.a!r}-{e.b!r} references an unknown node")
            ma, mb = Mark(e.mark_a), Mark(e.mark_b)
            if e.a > e.b:
                e = Edge(e.b, e.a, mb, ma, e.weight)
            else:
                e = Edge(e.a, e.b, ma, mb, e.weight)
            key = (e.a, e.b)
            if key in store:
                raise GraphError(f"more than one edge between {e.a!r} and {e.b!r}")
            store[key] = e
        self._nodes = nodes
        self._edges = dict(sorted(store.items()))

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(self._edges.values())

    def __len__(self) -> int:
        return len(self._edges)

    def edge(self, u: str, v: str) -> Optional[Edge]:
        return self._edges.get((u, v) if u < v else (v, u))

    def mark_at(self, u: str, v: str) -> Optional[Mark]:
        """Mark at ``v``'s end of the ``u``-``v`` edge, or None."""
        e = self.edge(u, v)
        if e is None:
            return None
        return e.mark_b if e.b == v else e.mark_a

    def adjacent(self, u: str, v: str) -> bool:
        return self.edge(u, v) is not None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return set(self._nodes) == set(other._nodes) and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._nodes), tuple(self._edges.values())))

    def __repr__(self) -> str:
        body = ", ".join(_edge_str(e) for e in self.edges)
        return f"MixedGraph(nodes={list(self._nodes)}, edges=[{body}])"

    # -- conversions to/from endpoint matrices ---------------------------

    def to_marks(self, order: Optional[Sequence[str]] = None) -> np.ndarray:
        """Endpoint matrix ``M`` with ``M[i, j]`` = code of the mark at j."""
        order = list(order) if order is not None else list(self._nodes)
        pos = {v: k for k, v in enumerate(order)}
        m = np.zeros((len(order), len(order)), dtype=np.int8)
        for e in self._edges.values():
            i, j = pos[e.a], pos[e.b]
            m[i, j] = _MARK_TO_CODE[e.mark_b]
            m[j, i] = _MARK_TO_CODE[e.mark_a]
        return m

    @classmethod
    def from_marks(cls, nodes: Sequence[str], marks: np.ndarray,
                   weights: Optional[np.ndarray] = None) -> "MixedGraph":
        nodes = list(nodes)
        edges = []
        p = len(nodes)
        for i in range(p):
            for j in range(i + 1, p):
                if marks[i, j] == NONE and marks[j, i] == NONE:
                    continue
                if marks[i, j] == NONE or marks[j, i] == NONE:
                    raise GraphError(f"half-specified edge {nodes[i]}-{nodes[j]}")
                w = None
                if weights is not None:
                    w = float(weights[i, j] if weights[i, j] != 0 else weights[j, i])
                edges.append(Edge(nodes[i], nodes[j], _CODE_TO_MARK[int(marks[j, i])],
                                  _CODE_TO_MARK[int(marks[i, j])], w))
        return cls(nodes, edges)

    @classmethod
    def from_cpdag_amat(cls, nodes: Sequence[str], amat: np.ndarray) -> "MixedGraph":
        """``amat[a, b] = 1`` means an arrowhead-free tail at a towards b.

        ``amat[a, b] == amat[b, a] == 1`` is undirected; ``amat[a, b] == 1``
        alone is ``a -> b``.
        """
        p = len(nodes)
        marks = np.zeros((p, p), dtype=np.int8)
        for i in range(p):
            for j in range(p):
                if amat[i, j] and amat[j, i]:
                    marks[i, j] = TAIL
                elif amat[i, j]:
                    marks[i, j] = ARROW
                    marks[j, i] = TAIL
        return cls.from_marks(nodes, marks)

    @classmethod
    def directed(cls, nodes: Iterable[str], arcs: Iterable[tuple],
                 ) -> "MixedGraph":
        """Build a graph of ``(u, v)`` or ``(u, v, weight)`` arcs ``u -> v``."""
        edges = []
        for arc in arcs:
            w = float(arc[2]) if len(arc) > 2 else None
            edges.append(Edge(arc[0], arc[1], Mark.TAIL, Mark.ARROW, w))
        return cls(nodes, edges)


def _edge_str(e: Edge) -> str:
    left = {Mark.TAIL: "-", Mark.ARROW: "<", Mark.CIRCLE: "o"}[e.mark_a]
    right = {Mark.TAIL: "-", Mark.ARROW: ">", Mark.CIRCLE: "o"}[e.mark_b]
    return f"{e.a} {left}-{right} {e.b}"


# --------------------------------------------------------------------------
# comparison tokens
# --------------------------------------------------------------------------


def edge_token(e: Edge) -> EdgeToken:
    arrow_a = e.mark_a is Mark.ARROW
    arrow_b = e.mark_b is Mark.ARROW
    if arrow_a and arrow_b:
        return EdgeToken("bidirected", e.a, e.b)
    if arrow_b:
        return EdgeToken("directed", e.a, e.b)
    if arrow_a:
        return EdgeToken("directed", e.b, e.a)
    return EdgeToken("undirected", e.a, e.b)


def canonical_tokens(g: MixedGraph) -> frozenset[EdgeToken]:
    """Collapse every edge to one comparable token.

    A lone arrowhead makes the edge directed towards it whatever sits at the
    other end; two arrowheads make it bidirected; no arrowhead at all
    (tails and circles in any mix) makes it undirected.
    """
    return frozenset(edge_token(e) for e in g.edges)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def _directed_cycle(g: MixedGraph) -> Optional[list[str]]:
    children: dict[str, list[str]] = {v: [] for v in g.nodes}
    for e in g.edges:
        if e.mark_a is Mark.TAIL and e.mark_b is Mark.ARROW:
            children[e.a].append(e.b)
        elif e.mark_b is Mark.TAIL and e.mark_a is Mark.ARROW:
            children[e.b].append(e.a)
    state = dict.fromkeys(g.nodes, 0)
    stack_path: list[str] = []

    def visit(u: str) -> Optional[list[str]]:
        state[u] = 1
        stack_path.append(u)
        for w in children[u]:
            if state[w] == 1:
                return stack_path[stack_path.index(w):] + [w]
            if state[w] == 0:
                found = visit(w)
                if found:
                    return found
        stack_path.pop()
        state[u] = 2
        return None

    for v in g.nodes:
        if state[v] == 0:
            found = visit(v)
            if found:
                return found
    return None


def validate(g: MixedGraph, claim: str) -> list[str]:
    """Return the list of violations of ``claim`` (``dag|cpdag|pag``); empty means ok."""
    if claim not in ("dag", "cpdag", "pag"):
        raise ValueError(f"unknown claim {claim!r}")
    problems = []
    for e in g.edges:
        for m in (e.mark_a, e.mark_b):
            if not isinstance(m, Mark):
                problems.append(f"unknown mark on {e.a}-{e.b}")
        if claim == "dag" and not (
            {e.mark_a, e.mark_b} == {Mark.TAIL, Mark.ARROW}
        ):
            problems.append(f"non-directed edge {_edge_str(e)}")
        if claim == "cpdag":
            if Mark.CIRCLE in (e.mark_a, e.mark_b):
                problems.append(f"circle mark on {_edge_str(e)}")
            if e.mark_a is Mark.ARROW and e.mark_b is Mark.ARROW:
                problems.append(f"bidirected edge {_edge_str(e)}")
    if claim in ("dag", "cpdag"):
        cycle = _directed_cycle(g)
        if cycle:
            problems.append("directed cycle " + " -> ".join(cycle))
    return problems


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def to_document(g: MixedGraph) -> dict:
    edges = []
    for e in g.edges:
        d = {"a": e.a, "b": e.b, "mark_a": e.mark_a.value, "mark_b": e.mark_b.value}
        if e.weight is not None:
            d["weight"] = e.weight
        edges.append(d)
    return {"nodes": list(g.nodes), "edges": edges}


def from_document(doc: dict) -> MixedGraph:
    try:
        nodes = doc["nodes"]
        if not isinstance(nodes, list) or not all(isinstance(v, str) for v in nodes):
            raise GraphError("'nodes' must be an array of strings")
        edges = []
        for d in doc["edges"]:
            unknown = set(d) - {"a", "b", "mark_a", "mark_b", "weight"}
            if unknown:
                raise GraphError(f"unknown edge fields {sorted(unknown)}")
            w = d.get("weight")
            if w is not None and not isinstance(w, (int, float)):
                raise GraphError("edge weight must be a number")
            edges.append(Edge(d["a"], d["b"], Mark(d["mark_a"]), Mark(d["mark_b"]),
                              None if w is None else float(w)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"malformed graph document: {exc}") from exc
    return MixedGraph(nodes, edges)


def serialize(g: MixedGraph) -> str:
    return json.dumps(to_document(g), indent=2) + "\n"


def deserialize(text: str) -> MixedGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")
    return from_document(doc)


def to_dot(g: MixedGraph, name: str = "G") -> str:
    lines = [f"digraph {json.dumps(name)} {{"]
    for v in g.nodes:
        lines.append(f"  {json.dumps(v)};")
    for tok in sorted(canonical_tokens(g)):
        a, b = json.dumps(tok.a), json.dumps(tok.b)
        if tok.kind == "directed":
            lines.append(f"  {a} -> {b};")
        elif tok.kind == "undirected":
            lines.append(f"  {a} -> {b} [dir=none];")
        else:
            lines.append(f"  {a} -> {b} [dir=both];")
    lines.append("}")
    return "\n".join(lines) + "\n"
