"""Canonical graph document serialization.

The document is a single JSON object with `version`, `metadata`,
`vertices[]`, and `edges[]`. Serialization is canonical: vertices are
sorted by id, edges by (from, to), and keys are emitted in sorted order,
so structurally equal graphs produce byte-identical documents and
serialize(deserialize(doc)) is idempotent.

Deserialization is strict: unknown fields are rejected, and every field
error names its location in the document.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from .errors import IntegrityError
from .model import (
    CausalEdge,
    CausalGraph,
    ExpertIndex,
    GraphMetadata,
    STACLabel,
    Vertex,
)

DOCUMENT_VERSION = 1

_METADATA_KEYS = {"narrative_id", "generated_at", "config_fingerprint", "components"}
_VERTEX_KEYS = {"id", "text", "expert_index", "stac", "source_span"}
_EDGE_KEYS = {"from", "to", "bond", "origin_iteration", "rationale"}


def _vertex_dict(v: Vertex) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": v.id,
        "text": v.text,
        "expert_index": v.expert_index.as_dict() if v.expert_index else None,
        "stac": v.stac.value if v.stac else None,
    }
    if v.source_span is not None:
        out["source_span"] = [v.source_span[0], v.source_span[1]]
    return out


def _edge_dict(e: CausalEdge) -> dict[str, Any]:
    return {
        "from": e.from_id,
        "to": e.to_id,
        "bond": [e.bond[0].value, e.bond[1].value],
        "origin_iteration": e.origin_iteration,
        "rationale": e.rationale,
    }


def graph_to_dict(graph: CausalGraph) -> dict[str, Any]:
    return {
        "version": DOCUMENT_VERSION,
        "metadata": graph.metadata.as_dict(),
        "vertices": [_vertex_dict(v) for v in sorted(graph.vertices, key=lambda v: v.id)],
        "edges": [_edge_dict(e) for e in sorted(graph.edges, key=lambda e: e.key)],
    }


def serialize_graph(graph: CausalGraph) -> str:
    """Render the canonical document for `graph`.

    The graph is validated first so a dangling edge can never be written.
    """
    graph.validate()
    return json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n"


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise IntegrityError(f"unknown field(s) {unknown} at {where}")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise IntegrityError(f"missing field {key!r} at {where}")
    return obj[key]


def _parse_vertex(obj: Any, where: str) -> Vertex:
    if not isinstance(obj, dict):
        raise IntegrityError(f"vertex at {where} is not an object")
    _reject_unknown(obj, _VERTEX_KEYS, where)
    vid = _require(obj, "id", where)
    text = _require(obj, "text", where)
    if not isinstance(vid, str) or not isinstance(text, str):
        raise IntegrityError(f"vertex id/text must be strings at {where}")
    ei_raw = _require(obj, "expert_index", where)
    stac_raw = _require(obj, "stac", where)
    try:
        ei = ExpertIndex.from_dict(ei_raw) if ei_raw is not None else None
        stac = STACLabel(stac_raw) if stac_raw is not None else None
    except ValueError as exc:
        raise IntegrityError(f"{exc} at {where}") from exc
    span: Optional[tuple[int, int]] = None
    if "source_span" in obj and obj["source_span"] is not None:
        raw_span = obj["source_span"]
        if (
            not isinstance(raw_span, list)
            or len(raw_span) != 2
            or not all(isinstance(x, int) for x in raw_span)
        ):
            raise IntegrityError(f"source_span must be [start, end] ints at {where}")
        span = (raw_span[0], raw_span[1])
    try:
        return Vertex(id=vid, text=text, source_span=span, expert_index=ei, stac=stac)
    except ValueError as exc:
        raise IntegrityError(f"{exc} at {where}") from exc


def _parse_edge(obj: Any, where: str) -> CausalEdge:
    if not isinstance(obj, dict):
        raise IntegrityError(f"edge at {where} is not an object")
    _reject_unknown(obj, _EDGE_KEYS, where)
    from_id = _require(obj, "from", where)
    to_id = _require(obj, "to", where)
    bond_raw = _require(obj, "bond", where)
    origin = _require(obj, "origin_iteration", where)
    rationale = _require(obj, "rationale", where)
    if not (isinstance(bond_raw, list) and len(bond_raw) == 2):
        raise IntegrityError(f"bond must be a two-element array at {where}")
    try:
        bond = (STACLabel(bond_raw[0]), STACLabel(bond_raw[1]))
    except ValueError as exc:
        raise IntegrityError(f"{exc} at {where}") from exc
    if rationale is not None and not isinstance(rationale, str):
        raise IntegrityError(f"rationale must be string or null at {where}")
    try:
        return CausalEdge(
            from_id=from_id,
            to_id=to_id,
            bond=bond,
            origin_iteration=origin,
            rationale=rationale,
        )
    except ValueError as exc:
        raise IntegrityError(f"{exc} at {where}") from exc


def graph_from_dict(doc: Any) -> CausalGraph:
    if not isinstance(doc, dict):
        raise IntegrityError("document root is not an object")
    _reject_unknown(doc, {"version", "metadata", "vertices", "edges"}, "$")
    version = _require(doc, "version", "$")
    if version != DOCUMENT_VERSION:
        raise IntegrityError(f"unsupported document version {version!r}")
    meta_raw = _require(doc, "metadata", "$")
    if not isinstance(meta_raw, dict):
        raise IntegrityError("metadata is not an object at $.metadata")
    _reject_unknown(meta_raw, _METADATA_KEYS, "$.metadata")
    metadata = GraphMetadata(
        narrative_id=meta_raw.get("narrative_id", ""),
        generated_at=meta_raw.get("generated_at", ""),
        config_fingerprint=meta_raw.get("config_fingerprint", ""),
        components=meta_raw.get("components"),
    )
    vertices_raw = _require(doc, "vertices", "$")
    edges_raw = _require(doc, "edges", "$")
    if not isinstance(vertices_raw, list) or not isinstance(edges_raw, list):
        raise IntegrityError("vertices and edges must be arrays")
    vertices = [
        _parse_vertex(v, f"$.vertices[{i}]") for i, v in enumerate(vertices_raw)
    ]
    edges = [_parse_edge(e, f"$.edges[{i}]") for i, e in enumerate(edges_raw)]
    graph = CausalGraph(vertices=tuple(vertices), edges=tuple(edges), metadata=metadata)
    graph.validate()
    return graph


def deserialize_graph(document: str) -> CausalGraph:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise IntegrityError(
            f"malformed document: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from exc
    return graph_from_dict(doc)


def save_graph(graph: CausalGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_graph(graph))


def load_graph(path) -> CausalGraph:
    with open(path, encoding="utf-8") as fh:
        return deserialize_graph(fh.read())
