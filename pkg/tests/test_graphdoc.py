"""Graph document serialization: canonical form, strict parsing, and a
random-graph round-trip property."""

import json

import pytest
from hypothesis import given, settings, strategies as st

from ncg.errors import IntegrityError
from ncg.graphdoc import deserialize_graph, serialize_graph
from ncg.model import CausalEdge, CausalGraph, GraphMetadata, STAC_LABELS, Vertex
from ncg.expert_index import enumerate_combinations

from conftest import make_graph

ALL_COMBOS = enumerate_combinations()


def test_empty_graph_round_trips():
    g = CausalGraph(vertices=(), edges=(), metadata=GraphMetadata(narrative_id="empty"))
    assert deserialize_graph(serialize_graph(g)) == g


def test_two_vertex_one_edge_round_trips():
    g = make_graph(2, edges=[("v001", "v002")])
    assert deserialize_graph(serialize_graph(g)) == g


def test_canonical_serialization_is_order_independent():
    g = make_graph(3, edges=[("v001", "v002"), ("v002", "v003")])
    reversed_graph = CausalGraph(
        vertices=tuple(reversed(g.vertices)),
        edges=tuple(reversed(g.edges)),
        metadata=g.metadata,
    )
    assert serialize_graph(g) == serialize_graph(reversed_graph)


def test_canonical_serialization_idempotent():
    g = make_graph(4, edges=[("v001", "v002")])
    doc = serialize_graph(g)
    assert serialize_graph(deserialize_graph(doc)) == doc


def test_document_shape():
    doc = json.loads(serialize_graph(make_graph(2, edges=[("v001", "v002")])))
    assert set(doc) == {"version", "metadata", "vertices", "edges"}
    assert doc["version"] == 1
    assert set(doc["vertices"][0]) >= {"id", "text", "expert_index", "stac"}
    assert set(doc["edges"][0]) == {"from", "to", "bond", "origin_iteration", "rationale"}


def test_unknown_root_field_rejected():
    doc = json.loads(serialize_graph(make_graph(1)))
    doc["color"] = "red"
    with pytest.raises(IntegrityError, match="unknown field"):
        deserialize_graph(json.dumps(doc))


def test_unknown_vertex_field_rejected():
    doc = json.loads(serialize_graph(make_graph(1)))
    doc["vertices"][0]["confidence"] = 0.5
    with pytest.raises(IntegrityError, match=r"vertices\[0\]"):
        deserialize_graph(json.dumps(doc))


def test_malformed_document_reports_location():
    with pytest.raises(IntegrityError, match="line 1"):
        deserialize_graph("{not json")


def test_dangling_edge_rejected():
    doc = json.loads(serialize_graph(make_graph(2, edges=[("v001", "v002")])))
    doc["vertices"] = doc["vertices"][:1]
    with pytest.raises(IntegrityError, match="unknown vertex"):
        deserialize_graph(json.dumps(doc))


def test_unsupported_version_rejected():
    doc = json.loads(serialize_graph(make_graph(1)))
    doc["version"] = 99
    with pytest.raises(IntegrityError, match="version"):
        deserialize_graph(json.dumps(doc))


@st.composite
def graphs(draw):
    n = draw(st.integers(min_value=0, max_value=8))
    vertices = []
    for i in range(n):
        stac = draw(st.sampled_from(STAC_LABELS))
        ei = draw(st.one_of(st.none(), st.sampled_from(ALL_COMBOS)))
        span = draw(
            st.one_of(
                st.none(),
                st.tuples(st.integers(0, 50), st.integers(0, 50)).map(
                    lambda t: (min(t), max(t))
                ),
            )
        )
        text = draw(st.text(min_size=1, max_size=40).filter(lambda s: s.strip()))
        vertices.append(
            Vertex(id=f"v{i:03d}", text=text, source_span=span, expert_index=ei, stac=stac)
        )
    edges = []
    if n >= 2:
        pairs = draw(
            st.lists(
                st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(
                    lambda t: t[0] != t[1]
                ),
                max_size=10,
                unique=True,
            )
        )
        for a, b in pairs:
            u, v = vertices[a], vertices[b]
            edges.append(
                CausalEdge(
                    from_id=u.id,
                    to_id=v.id,
                    bond=(u.stac, v.stac),
                    origin_iteration=draw(st.sampled_from([2, 4])),
                    rationale=draw(st.one_of(st.none(), st.text(max_size=20))),
                )
            )
    return CausalGraph(
        vertices=tuple(vertices),
        edges=tuple(edges),
        metadata=GraphMetadata(
            narrative_id="prop", generated_at="2024-01-01T00:00:00Z", config_fingerprint="fp"
        ),
    )


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_random_graph_round_trip(graph):
    doc = serialize_graph(graph)
    restored = deserialize_graph(doc)
    assert restored.structurally_equal(graph)
    assert serialize_graph(restored) == doc
