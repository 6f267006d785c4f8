"""End-to-end pipeline orchestration.

Stages: ingest -> (train) -> extract -> label -> build-graph -> export.
Each stage is gated by a content fingerprint (input hashes + config
fingerprint + model fingerprint); a rerun with unchanged inputs is a
cache-hit that performs no work and no gateway calls. Every run writes a
deterministic manifest so equal fingerprints imply byte-identical graph
documents.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .builder import build_graph
from .config import PipelineConfig
from .datasets import attach_embeddings, content_hash, fixture_rows, load_dataset_tsv
from .embedding import EmbeddingCache, HTTPEmbedder, MockEmbedder, embed_texts
from .errors import ConfigurationError, NcgError
from .export import to_dot
from .extraction import NarrativeText, extract_vertices
from .gateway import (
    Cassette,
    ENV_API_KEY,
    ENV_BASE_URL,
    GatewayMode,
    HTTPProvider,
    LLMGateway,
)
from .expert_index import predict_expert_index, train_all_traits
from .graphdoc import load_graph, serialize_graph
from .model import ExpertIndex, STACLabel, Vertex
from .stac import build_feature_vector, predict_stac_many, train_stac
from .workspace import Workspace, sha256_file, sha256_text

logger = logging.getLogger(__name__)

STAGE_RAN = "ran"
STAGE_CACHED = "cache-hit"


@dataclass
class RunResult:
    narrative_id: str
    stages: dict[str, str] = field(default_factory=dict)
    gateway_completions: int = 0
    graph_path: Optional[Path] = None
    trace_path: Optional[Path] = None
    manifest_path: Optional[Path] = None


def make_embedder(config: PipelineConfig):
    if config.embedder == "http":
        return HTTPEmbedder(base_url=config.embed_url)
    return MockEmbedder()


def make_gateway(config: PipelineConfig, cassette_path) -> LLMGateway:
    mode = GatewayMode.from_string(config.mode)
    provider = None
    if mode is not GatewayMode.REPLAY:
        provider = HTTPProvider(base_url=config.llm_base_url)
    return LLMGateway(
        provider=provider,
        cassette=Cassette(cassette_path),
        mode=mode,
        max_in_flight=config.max_in_flight,
    )


def check_live_credentials(config: PipelineConfig) -> None:
    """Fail before any stage runs when live/record mode lacks credentials."""
    if config.mode == "replay":
        return
    if not (config.llm_base_url or os.environ.get(ENV_BASE_URL)):
        raise ConfigurationError(
            f"{config.mode} mode needs a provider base URL ({ENV_BASE_URL})"
        )
    if not os.environ.get(ENV_API_KEY):
        raise ConfigurationError(f"{config.mode} mode needs an API key ({ENV_API_KEY})")


def _load_training_rows(config: PipelineConfig):
    if config.dataset:
        return load_dataset_tsv(config.dataset)
    return fixture_rows()


def models_fingerprint(config: PipelineConfig, dataset_hash: str) -> str:
    relevant = json.dumps(
        {
            "dataset": dataset_hash,
            "split_seed": config.split_seed,
            "eventivity_arity": config.eventivity_arity,
            "stac_variant": config.stac_variant,
            "tree": dict(config.tree),
            "embedder": config.embedder,
        },
        sort_keys=True,
    )
    return sha256_text(relevant)


def train_models(config: PipelineConfig, workspace: Workspace) -> str:
    """Train the seven trait heads plus the STAC model; returns the model
    fingerprint. A matching fingerprint on disk makes this a no-op."""
    rows = _load_training_rows(config)
    fingerprint = models_fingerprint(config, content_hash(rows))
    if workspace.models_fingerprint() == fingerprint:
        logger.info("models cache-hit (%s)", fingerprint[:12])
        return fingerprint
    embedder = make_embedder(config)
    cache = EmbeddingCache(workspace.embedding_cache_path())
    data = attach_embeddings(rows, embedder, cache)
    cache.save()
    schema = config.trait_schema()
    tree_params = config.tree_params()
    traits = train_all_traits(
        data, config.split_seed, schema=schema, tree_params=tree_params
    )
    stac_model = train_stac(
        data,
        config.stac_variant_obj(),
        config.split_seed,
        schema=schema,
        tree_params=tree_params,
    )
    workspace.save_models(
        {"traits": traits, "stac": stac_model, "encoder_id": embedder.encoder_id},
        fingerprint,
    )
    logger.info("trained models (%s)", fingerprint[:12])
    return fingerprint


def _stage(result: RunResult, name: str, status: str) -> None:
    result.stages[name] = status
    logger.info("stage %s: %s", name, status)


def _augment(exc: NcgError, stage: str, artifact) -> None:
    exc.args = (f"[stage {stage}] {exc.args[0] if exc.args else ''} (artifact: {artifact})",)


def vertices_doc(narrative_id: str, vertices: list[Vertex]) -> str:
    rows = []
    for v in vertices:
        row = {"id": v.id, "text": v.text}
        if v.source_span is not None:
            row["source_span"] = list(v.source_span)
        if v.expert_index is not None:
            row["expert_index"] = v.expert_index.as_dict()
        if v.stac is not None:
            row["stac"] = v.stac.value
        rows.append(row)
    return json.dumps(
        {"narrative_id": narrative_id, "vertices": rows}, indent=2, sort_keys=True
    ) + "\n"


def vertices_from_doc(doc_text: str) -> list[Vertex]:
    doc = json.loads(doc_text)
    out = []
    for row in doc["vertices"]:
        span = tuple(row["source_span"]) if "source_span" in row else None
        ei = ExpertIndex.from_dict(row["expert_index"]) if "expert_index" in row else None
        stac = STACLabel(row["stac"]) if "stac" in row else None
        out.append(
            Vertex(id=row["id"], text=row["text"], source_span=span, expert_index=ei, stac=stac)
        )
    return out


def run_pipeline(
    narrative_file,
    config: PipelineConfig,
    workspace: Workspace,
    train_first: bool = False,
    gold_ei: bool = False,
) -> RunResult:
    """Execute every stage for one narrative and write the run manifest."""
    check_live_credentials(config)
    workspace.init()
    config_fp = config.fingerprint()
    narrative_path = Path(narrative_file)
    narrative_id = narrative_path.stem
    result = RunResult(narrative_id=narrative_id)

    with workspace.lock():
        # ingest
        body = narrative_path.read_text(encoding="utf-8")
        corpus_path = workspace.corpus_path(narrative_id)
        narr_hash = sha256_text(body)
        if corpus_path.exists() and sha256_file(corpus_path) == narr_hash:
            _stage(result, "ingest", STAGE_CACHED)
        else:
            corpus_path.parent.mkdir(parents=True, exist_ok=True)
            corpus_path.write_text(body, encoding="utf-8")
            _stage(result, "ingest", STAGE_RAN)

        # models
        if train_first:
            prior_fp = workspace.models_fingerprint()
            models_fp = train_models(config, workspace)
            _stage(result, "train", STAGE_CACHED if prior_fp == models_fp else STAGE_RAN)
        else:
            models_fp = workspace.models_fingerprint()
            if models_fp is None:
                raise ConfigurationError(
                    "no trained models in the workspace; pass train_first or run `ncg train`"
                )
            _stage(result, "train", STAGE_CACHED)

        cassette_path = (
            Path(config.cassette) if config.cassette else workspace.cassette_path(narrative_id)
        )
        gateway: Optional[LLMGateway] = None

        def get_gateway() -> LLMGateway:
            nonlocal gateway
            if gateway is None:
                gateway = make_gateway(config, cassette_path)
            return gateway

        # extract
        vertices_path = workspace.vertices_path(narrative_id)
        extract_fp = sha256_text(f"extract\x1f{narr_hash}\x1f{config_fp}")
        if workspace.is_fresh(vertices_path, extract_fp):
            _stage(result, "extract", STAGE_CACHED)
            vertices = vertices_from_doc(vertices_path.read_text(encoding="utf-8"))
        else:
            try:
                narrative = NarrativeText.from_text(narrative_id, body)
                vertices = extract_vertices(
                    narrative,
                    get_gateway(),
                    config.gen_params(),
                    max_vertices=config.max_vertices,
                )
            except NcgError as exc:
                _augment(exc, "extract", vertices_path)
                raise
            workspace.write_artifact(
                vertices_path, vertices_doc(narrative_id, vertices), extract_fp
            )
            _stage(result, "extract", STAGE_RAN)

        # label
        labeled_path = workspace.labeled_path(narrative_id)
        label_fp = sha256_text(
            f"label\x1f{sha256_file(vertices_path)}\x1f{config_fp}\x1f{models_fp}\x1f{gold_ei}"
        )
        if workspace.is_fresh(labeled_path, label_fp):
            _stage(result, "label", STAGE_CACHED)
            vertices = vertices_from_doc(labeled_path.read_text(encoding="utf-8"))
        else:
            try:
                vertices = label_vertices(vertices, config, workspace, models_fp, gold_ei)
            except NcgError as exc:
                _augment(exc, "label", labeled_path)
                raise
            workspace.write_artifact(
                labeled_path, vertices_doc(narrative_id, vertices), label_fp
            )
            _stage(result, "label", STAGE_RAN)

        # build-graph
        graph_path = workspace.graph_path(narrative_id)
        trace_path = workspace.trace_path(narrative_id)
        build_fp = sha256_text(f"build\x1f{sha256_file(labeled_path)}\x1f{config_fp}")
        if workspace.is_fresh(graph_path, build_fp) and workspace.is_fresh(trace_path, build_fp):
            _stage(result, "build-graph", STAGE_CACHED)
        else:
            try:
                graph, trace = build_graph(
                    vertices,
                    get_gateway(),
                    config.gen_params(),
                    schema=config.bond_schema_obj(),
                    max_refinement_rounds=config.max_refinement_rounds,
                    narrative_id=narrative_id,
                    config_fingerprint=config_fp,
                )
            except NcgError as exc:
                _augment(exc, "build-graph", graph_path)
                raise
            workspace.write_artifact(graph_path, serialize_graph(graph), build_fp)
            workspace.write_artifact(trace_path, trace.to_json(), build_fp)
            _stage(result, "build-graph", STAGE_RAN)

        # export
        dot_path = workspace.dot_path(narrative_id)
        dot_fp = sha256_text(f"dot\x1f{sha256_file(graph_path)}")
        if workspace.is_fresh(dot_path, dot_fp):
            _stage(result, "export", STAGE_CACHED)
        else:
            workspace.write_artifact(dot_path, to_dot(load_graph(graph_path)), dot_fp)
            _stage(result, "export", STAGE_RAN)

        # manifest: deterministic, so equal fingerprints imply equal bytes
        manifest = {
            "narrative_id": narrative_id,
            "config_fingerprint": config_fp,
            "config": config.to_dict(),
            "narrative_sha256": narr_hash,
            "cassette_sha256": sha256_file(cassette_path) if cassette_path.exists() else "",
            "models_fingerprint": models_fp,
            "artifacts": {
                "vertices": sha256_file(vertices_path),
                "labeled": sha256_file(labeled_path),
                "graph": sha256_file(graph_path),
                "trace": sha256_file(trace_path),
                "dot": sha256_file(dot_path),
            },
            "stage_fingerprints": {
                "extract": extract_fp,
                "label": label_fp,
                "build-graph": build_fp,
                "export": dot_fp,
            },
        }
        manifest_path = workspace.manifest_path(narrative_id)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    result.gateway_completions = len(gateway.usage) if gateway is not None else 0
    result.graph_path = graph_path
    result.trace_path = trace_path
    result.manifest_path = manifest_path
    return result


def label_vertices(
    vertices: list[Vertex],
    config: PipelineConfig,
    workspace: Workspace,
    models_fp: str,
    gold_ei: bool,
) -> list[Vertex]:
    """Embed every vertex, predict the expert index (optionally overridden
    by gold labels for texts found in the training dataset), then predict
    the STAC label."""
    bundle = workspace.load_models(expected_fingerprint=models_fp)
    embedder = make_embedder(config)
    cache = EmbeddingCache(workspace.embedding_cache_path())
    embeddings = embed_texts([v.text for v in vertices], embedder, cache)
    cache.save()

    gold_map: dict[str, ExpertIndex] = {}
    if gold_ei:
        gold_map = {row.text: row.expert_index for row in _load_training_rows(config)}

    schema = config.trait_schema()
    variant = config.stac_variant_obj()
    labeled = []
    features = []
    for vertex, embedding in zip(vertices, embeddings):
        ei = gold_map.get(vertex.text) or predict_expert_index(bundle["traits"], embedding)
        features.append(build_feature_vector(embedding, ei, variant.layout, schema))
        labeled.append(vertex.with_labels(expert_index=ei))
    stac_labels = predict_stac_many(bundle["stac"], features)
    return [v.with_labels(stac=s) for v, s in zip(labeled, stac_labels)]
