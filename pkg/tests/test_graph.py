import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalstab.graph import (
    Edge,
    EdgeToken,
    GraphError,
    Mark,
    MixedGraph,
    canonical_tokens,
    deserialize,
    serialize,
    to_dot,
    validate,
)
from oracles import has_topological_order

T, A, C = Mark.TAIL, Mark.ARROW, Mark.CIRCLE


def test_mark_vocabulary():
    assert {m.value for m in Mark} == {"tail", "arrow", "circle"}


def test_edges_stored_canonically():
    g = MixedGraph(["y", "x"], [Edge("y", "x", T, A)])
    (e,) = g.edges
    assert (e.a, e.b, e.mark_a, e.mark_b) == ("x", "y", A, T)
    assert g.mark_at("y", "x") is A  # arrowhead sits at x
    assert g.mark_at("x", "y") is T
    assert g.adjacent("y", "x")


def test_rejects_bad_edges():
    with pytest.raises(GraphError):
        MixedGraph(["a"], [Edge("a", "a", T, A)])
    with pytest.raises(GraphError):
        MixedGraph(["a", "b"], [Edge("a", "b", T, A), Edge("b", "a", T, A)])
    with pytest.raises(GraphError):
        MixedGraph(["a", "b"], [Edge("a", "c", T, A)])


@pytest.mark.parametrize("ma, mb, token", [
    (T, A, EdgeToken("directed", "a", "b")),
    (A, T, EdgeToken("directed", "b", "a")),
    (C, C, EdgeToken("undirected", "a", "b")),
    (C, A, EdgeToken("directed", "a", "b")),
    (A, C, EdgeToken("directed", "b", "a")),
    (T, T, EdgeToken("undirected", "a", "b")),
    (T, C, EdgeToken("undirected", "a", "b")),
    (A, A, EdgeToken("bidirected", "a", "b")),
])
def test_token_collapsing_table(ma, mb, token):
    assert canonical_tokens(MixedGraph(["a", "b"], [Edge("a", "b", ma, mb)])) == {token}


def _random_graph(draw_edges, nodes):
    return MixedGraph(nodes, [Edge(a, b, ma, mb) for a, b, ma, mb in draw_edges])


edge_lists = st.integers(2, 7).flatmap(lambda p: st.tuples(
    st.just([f"v{k}" for k in range(p)]),
    st.lists(st.tuples(st.integers(0, p - 1), st.integers(0, p - 1),
                       st.sampled_from(list(Mark)), st.sampled_from(list(Mark))), max_size=15),
    st.randoms(use_true_random=False),
))


@settings(max_examples=200, deadline=None)
@given(edge_lists)
def test_tokens_invariant_under_insertion_order(case):
    nodes, raw, rnd = case
    seen, edges = set(), []
    for i, j, ma, mb in raw:
        key = frozenset((i, j))
        if i != j and key not in seen:
            seen.add(key)
            edges.append((nodes[i], nodes[j], ma, mb))
    g1 = _random_graph(edges, nodes)
    shuffled_edges = edges[:]
    rnd.shuffle(shuffled_edges)
    shuffled_nodes = nodes[:]
    rnd.shuffle(shuffled_nodes)
    g2 = _random_graph(shuffled_edges, shuffled_nodes)
    assert canonical_tokens(g1) == canonical_tokens(g2)
    assert len(canonical_tokens(g1)) == len(g1) == len(edges)
    assert g1 == g2
    assert validate(g1, "pag") == []


def test_validate_examples():
    cyc = MixedGraph.directed("abc", [("a", "b"), ("b", "c"), ("c", "a")])
    assert any("cycle" in v for v in validate(cyc, "dag"))
    ok = MixedGraph("abc", [Edge("a", "b", T, A), Edge("b", "c", T, T)])
    assert validate(ok, "cpdag") == []
    assert validate(ok, "dag") != []
    circ = MixedGraph("ab", [Edge("a", "b", C, C)])
    assert any("circle" in v for v in validate(circ, "cpdag"))
    assert validate(circ, "pag") == []
    with pytest.raises(ValueError):
        validate(ok, "tree")


def test_validate_dag_matches_topological_sort_oracle():
    rng = np.random.default_rng(0)
    disagreements = 0
    accepted = 0
    for _ in range(1000):
        p = int(rng.integers(2, 7))
        nodes = [f"n{k}" for k in range(p)]
        arcs = []
        for i, j in itertools.combinations(range(p), 2):
            r = rng.random()
            if r < 0.25:
                arcs.append((nodes[i], nodes[j]))
            elif r < 0.5:
                arcs.append((nodes[j], nodes[i]))
        ok = validate(MixedGraph.directed(nodes, arcs), "dag") == []
        accepted += ok
        disagreements += ok != has_topological_order(nodes, arcs)
    assert disagreements == 0
    assert 0 < accepted < 1000


def test_serialize_roundtrip_and_stability():
    g = MixedGraph(["x", "y", "z"], [Edge("x", "y", T, A, 0.8), Edge("y", "z", C, A)])
    text = serialize(g)
    back = deserialize(text)
    assert back == g
    assert back.edge("x", "y").weight == 0.8
    assert serialize(back) == text
    assert json.loads(text)["edges"][0] == {"a": "x", "b": "y", "mark_a": "tail",
                                             "mark_b": "arrow", "weight": 0.8}
    empty = MixedGraph(["x", "y"])
    assert deserialize(serialize(empty)) == empty


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_weight_roundtrip_exact(w):
    g = MixedGraph.directed(["a", "b"], [("a", "b", w)])
    assert deserialize(serialize(g)).edge("a", "b").weight == w


@pytest.mark.parametrize("text", [
    "not json",
    "[]",
    '{"nodes": ["a", "b"]}',
    '{"nodes": ["a", "b"], "edges": [{"a": "a", "b": "b", "mark_a": "tail", "mark_b": "spear"}]}',
    '{"nodes": ["a", "b"], "edges": [{"a": "a", "b": "q", "mark_a": "tail", "mark_b": "arrow"}]}',
    '{"nodes": [1, 2], "edges": []}',
])
def test_deserialize_errors(text):
    with pytest.raises(GraphError):
        deserialize(text)


def test_dot_export():
    g = MixedGraph("abcd", [Edge("a", "b", T, A), Edge("b", "c", T, T), Edge("c", "d", A, A)])
    dot = to_dot(g)
    assert '"a" -> "b";' in dot
    assert '"b" -> "c" [dir=none];' in dot
    assert '"c" -> "d" [dir=both];' in dot


def test_marks_matrix_roundtrip():
    g = MixedGraph("abc", [Edge("a", "b", C, A), Edge("b", "c", T, T)])
    assert MixedGraph.from_marks(g.nodes, g.to_marks()) == g
