"""Command-line entry point.

Failures map to stable exit codes by error class:
1 configuration, 2 gateway/provider, 3 extraction, 4 classification,
5 graph integrity, 6 evaluation.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .config import PipelineConfig, load_config
from .datasets import attach_embeddings, fixture_rows, load_dataset_tsv
from .errors import (
    ConfigurationError,
    ContractError,
    DegenerateAgreementError,
    DegenerateDataError,
    DegeneratePairError,
    ExtractionError,
    GatewayError,
    IntegrityError,
    NcgError,
    ParseError,
    PartialJudgeError,
    WorkspaceLockedError,
)
from .graphdoc import load_graph
from .metrics import cohens_kappa
from .pipeline import (
    check_live_credentials,
    make_embedder,
    make_gateway,
    run_pipeline,
    train_models,
)
from .stac import StacVariant, ablation_run
from .workspace import Workspace

logger = logging.getLogger(__name__)

EXIT_CODES: tuple[tuple[type, int], ...] = (
    (ConfigurationError, 1),
    (WorkspaceLockedError, 1),
    (GatewayError, 2),
    (ExtractionError, 3),
    (DegenerateDataError, 4),
    (ParseError, 4),
    (IntegrityError, 5),
    (DegenerateAgreementError, 6),
    (DegeneratePairError, 6),
    (PartialJudgeError, 6),
    (ContractError, 6),
)


def exit_code_for(exc: NcgError) -> int:
    for err_type, code in EXIT_CODES:
        if isinstance(exc, err_type):
            return code
    return 1


def handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except NcgError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exit_code_for(exc))

    return wrapper


def _load_cfg(config_path, mode, seed) -> PipelineConfig:
    cfg = load_config(config_path) if config_path else PipelineConfig()
    if mode:
        cfg = cfg.with_mode(mode)
    if seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed, split_seed=seed)
    return cfg


def common_options(f):
    f = click.option("--config", "config_path", type=click.Path(), help="Pipeline config file (JSON).")(f)
    f = click.option("--mode", type=click.Choice(["live", "record", "replay"]), default=None)(f)
    f = click.option("--workspace", "workspace_dir", type=click.Path(), default="workspace")(f)
    f = click.option("--seed", type=int, default=None)(f)
    return f


@click.group()
@click.version_option(version=__version__, prog_name="ncg")
@click.option("-v", "--verbose", is_flag=True, help="Log stage progress.")
def main(verbose: bool):
    """Build causal graphs from narrative texts and evaluate them."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@common_options
@click.argument("narrative", type=click.Path(exists=True))
@click.option("--narrative-id", default=None, help="Override the id (defaults to the file stem).")
@click.option("--cassette", type=click.Path(exists=True), default=None,
              help="Install a recorded cassette for this narrative.")
@handle_errors
def ingest(config_path, mode, workspace_dir, seed, narrative, narrative_id, cassette):
    """Copy a narrative into the workspace corpus."""
    ws = Workspace(workspace_dir).init()
    src = Path(narrative)
    nid = narrative_id or src.stem
    ws.corpus_path(nid).write_text(src.read_text(encoding="utf-8"), encoding="utf-8")
    if cassette:
        ws.cassette_path(nid).write_text(
            Path(cassette).read_text(encoding="utf-8"), encoding="utf-8"
        )
    click.echo(f"ingested {nid} into {ws.root}")


@main.command()
@common_options
@click.option("--dataset", type=click.Path(exists=True), default=None,
              help="Labeled TSV (defaults to the bundled fixture set).")
@click.option("--evaluate/--no-evaluate", default=True,
              help="Score the trait heads on the held-out split.")
@handle_errors
def train(config_path, mode, workspace_dir, seed, dataset, evaluate):
    """Train the trait heads and the STAC classifier."""
    cfg = _load_cfg(config_path, mode, seed)
    if dataset:
        from dataclasses import replace

        cfg = replace(cfg, dataset=str(dataset))
    ws = Workspace(workspace_dir).init()
    fingerprint = train_models(cfg, ws)
    click.echo(f"models ready ({fingerprint[:12]})")
    if evaluate:
        from .expert_index import evaluate_feature_models, holdout_split
        from .pipeline import make_embedder as _embedder, _load_training_rows

        rows = _load_training_rows(cfg)
        data = attach_embeddings(rows, _embedder(cfg))
        _, testset = holdout_split(data, cfg.split_seed)
        report = evaluate_feature_models(ws.load_models(fingerprint)["traits"], testset)
        click.echo(report.render())
        out = ws.report_path("trait_eval.txt")
        out.write_text(report.render() + "\n", encoding="utf-8")
        click.echo(f"report: {out}")


@main.command()
@common_options
@click.argument("narrative", type=click.Path(exists=True))
@click.option("--train-first", is_flag=True, help="Train models before running.")
@click.option("--gold-ei", is_flag=True,
              help="Substitute gold expert-index labels for texts found in the dataset.")
@handle_errors
def run(config_path, mode, workspace_dir, seed, narrative, train_first, gold_ei):
    """Run the full pipeline: extract, label, build, export."""
    cfg = _load_cfg(config_path, mode, seed)
    ws = Workspace(workspace_dir)
    result = run_pipeline(narrative, cfg, ws, train_first=train_first, gold_ei=gold_ei)
    for stage, status in result.stages.items():
        click.echo(f"{stage}: {status}")
    click.echo(f"graph: {result.graph_path}")
    click.echo(f"manifest: {result.manifest_path}")


@main.command()
@common_options
@click.argument("narrative_id")
@handle_errors
def extract(config_path, mode, workspace_dir, seed, narrative_id):
    """Extract vertices for an ingested narrative."""
    from .extraction import NarrativeText, extract_vertices
    from .pipeline import vertices_doc
    from .workspace import sha256_text

    cfg = _load_cfg(config_path, mode, seed)
    check_live_credentials(cfg)
    ws = Workspace(workspace_dir).init()
    corpus = ws.corpus_path(narrative_id)
    if not corpus.exists():
        raise ConfigurationError(f"narrative {narrative_id!r} not ingested (missing {corpus})")
    body = corpus.read_text(encoding="utf-8")
    gateway = make_gateway(cfg, ws.cassette_path(narrative_id))
    vertices = extract_vertices(
        NarrativeText.from_text(narrative_id, body),
        gateway, cfg.gen_params(), max_vertices=cfg.max_vertices,
    )
    fp = sha256_text(f"extract\x1f{sha256_text(body)}\x1f{cfg.fingerprint()}")
    ws.write_artifact(ws.vertices_path(narrative_id), vertices_doc(narrative_id, vertices), fp)
    click.echo(f"extracted {len(vertices)} vertices -> {ws.vertices_path(narrative_id)}")


@main.command()
@common_options
@click.argument("narrative_id")
@click.option("--gold-ei", is_flag=True)
@handle_errors
def label(config_path, mode, workspace_dir, seed, narrative_id, gold_ei):
    """Predict expert-index traits and STAC labels for extracted vertices."""
    from .pipeline import label_vertices, vertices_doc, vertices_from_doc
    from .workspace import sha256_file, sha256_text

    cfg = _load_cfg(config_path, mode, seed)
    ws = Workspace(workspace_dir).init()
    vertices_path = ws.vertices_path(narrative_id)
    if not vertices_path.exists():
        raise ConfigurationError(f"no extracted vertices for {narrative_id!r}")
    vertices = vertices_from_doc(vertices_path.read_text(encoding="utf-8"))
    models_fp = ws.models_fingerprint()
    if models_fp is None:
        raise ConfigurationError("no trained models; run `ncg train` first")
    labeled = label_vertices(vertices, cfg, ws, models_fp, gold_ei)
    fp = sha256_text(
        f"label\x1f{sha256_file(vertices_path)}\x1f{cfg.fingerprint()}\x1f{models_fp}\x1f{gold_ei}"
    )
    ws.write_artifact(ws.labeled_path(narrative_id), vertices_doc(narrative_id, labeled), fp)
    click.echo(f"labeled {len(labeled)} vertices -> {ws.labeled_path(narrative_id)}")


@main.command("build-graph")
@common_options
@click.argument("narrative_id")
@handle_errors
def build_graph_cmd(config_path, mode, workspace_dir, seed, narrative_id):
    """Run the five-stage edge construction over labeled vertices."""
    from .builder import build_graph
    from .graphdoc import serialize_graph
    from .pipeline import vertices_from_doc
    from .workspace import sha256_file, sha256_text

    cfg = _load_cfg(config_path, mode, seed)
    check_live_credentials(cfg)
    ws = Workspace(workspace_dir).init()
    labeled_path = ws.labeled_path(narrative_id)
    if not labeled_path.exists():
        raise ConfigurationError(f"no labeled vertices for {narrative_id!r}")
    vertices = vertices_from_doc(labeled_path.read_text(encoding="utf-8"))
    gateway = make_gateway(cfg, ws.cassette_path(narrative_id))
    graph, trace = build_graph(
        vertices, gateway, cfg.gen_params(),
        schema=cfg.bond_schema_obj(),
        max_refinement_rounds=cfg.max_refinement_rounds,
        narrative_id=narrative_id,
        config_fingerprint=cfg.fingerprint(),
    )
    fp = sha256_text(f"build\x1f{sha256_file(labeled_path)}\x1f{cfg.fingerprint()}")
    ws.write_artifact(ws.graph_path(narrative_id), serialize_graph(graph), fp)
    ws.write_artifact(ws.trace_path(narrative_id), trace.to_json(), fp)
    click.echo(
        f"graph: {len(graph.vertices)} vertices, {len(graph.edges)} edges, "
        f"{graph.metadata.components} component(s) ({trace.exit_status})"
    )


@main.command("export-dot")
@common_options
@click.argument("narrative_id")
@click.option("--include-pruned", is_flag=True, help="Render pruned proposals dashed.")
@handle_errors
def export_dot(config_path, mode, workspace_dir, seed, narrative_id, include_pruned):
    """Write the DOT rendering of a built graph."""
    from .builder import EdgeProposal, ProposalVerdict
    from .export import to_dot
    from .model import STACLabel

    ws = Workspace(workspace_dir)
    graph_path = ws.graph_path(narrative_id)
    if not graph_path.exists():
        raise ConfigurationError(f"no graph for {narrative_id!r}; run build-graph first")
    graph = load_graph(graph_path)
    pruned = []
    trace_path = ws.trace_path(narrative_id)
    if include_pruned and trace_path.exists():
        trace_doc = json.loads(trace_path.read_text(encoding="utf-8"))
        for row in trace_doc.get("pruned", []):
            pruned.append(
                EdgeProposal(
                    from_id=row["from"],
                    to_id=row["to"],
                    bond=(STACLabel(row["bond"][0]), STACLabel(row["bond"][1])),
                    verdict=ProposalVerdict.PRUNED,
                )
            )
    dot = to_dot(graph, include_pruned=include_pruned, pruned=pruned)
    ws.dot_path(narrative_id).write_text(dot, encoding="utf-8")
    click.echo(str(ws.dot_path(narrative_id)))


@main.command()
@common_options
@click.option("--dataset", type=click.Path(exists=True), default=None)
@click.option("--seeds", default="0", help="Comma-separated split seeds.")
@click.option("--variants", default=None,
              help="Comma-separated variant names (default: all trained variants).")
@handle_errors
def ablate(config_path, mode, workspace_dir, seed, dataset, seeds, variants):
    """Train and score the classifier variants on identical splits."""
    cfg = _load_cfg(config_path, mode, seed)
    rows = load_dataset_tsv(dataset) if dataset else fixture_rows()
    data = attach_embeddings(rows, make_embedder(cfg))
    seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    if variants:
        try:
            variant_list = [StacVariant(v.strip()) for v in variants.split(",")]
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
    else:
        variant_list = [v for v in StacVariant if v is not StacVariant.PROMPT_BASED]
    report = ablation_run(
        data, seed_list, variants=variant_list,
        schema=cfg.trait_schema(), tree_params=cfg.tree_params(),
    )
    ws = Workspace(workspace_dir).init()
    out = ws.report_path("ablation.json")
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    ws.report_path("ablation.tsv").write_text(report.to_delimited(), encoding="utf-8")
    click.echo(report.render())
    click.echo(f"report: {out}")


@main.command()
@common_options
@click.option("--story", type=click.Path(exists=True), required=True)
@click.option("--graph-a", type=click.Path(exists=True), required=True)
@click.option("--graph-b", type=click.Path(exists=True), required=True)
@click.option("--narrative-id", default="")
@handle_errors
def judge(config_path, mode, workspace_dir, seed, story, graph_a, graph_b, narrative_id):
    """Judge two graph documents across the eight quality dimensions."""
    from .judge import judge_pair, win_rate_table

    cfg = _load_cfg(config_path, mode, seed)
    check_live_credentials(cfg)
    ws = Workspace(workspace_dir).init()
    nid = narrative_id or Path(story).stem
    gateway = make_gateway(cfg, ws.cassette_path(f"judge-{nid}"))
    verdicts = judge_pair(
        Path(story).read_text(encoding="utf-8"),
        load_graph(graph_a),
        load_graph(graph_b),
        gateway, cfg.gen_params(),
        narrative_id=nid, seed=cfg.seed,
    )
    for v in verdicts:
        click.echo(f"{v.dimension}: {v.winner.value}")
    table = win_rate_table(verdicts)
    out = ws.report_path(f"judge-{nid}.json")
    out.write_text(
        json.dumps(
            {
                "narrative_id": nid,
                "verdicts": [
                    {"dimension": v.dimension, "winner": v.winner.value} for v in verdicts
                ],
                "win_rates": table.rates,
            },
            indent=2, sort_keys=True,
        ) + "\n",
        encoding="utf-8",
    )
    click.echo(table.render())


@main.command()
@click.argument("annotations", type=click.Path(exists=True))
@click.option("--annotator-a", required=True)
@click.option("--annotator-b", required=True)
@handle_errors
def kappa(annotations, annotator_a, annotator_b):
    """Cohen's kappa between two annotators in a (item_id, annotator_id,
    label) delimited file."""
    from .metrics import aligned_labels, load_annotations

    records = load_annotations(annotations)
    seq_a, seq_b = aligned_labels(records, annotator_a, annotator_b)
    value = cohens_kappa(seq_a, seq_b)
    click.echo(f"kappa: {value:.4f} (n={len(seq_a)})")


@main.command()
@common_options
@click.argument("narrative_id")
@handle_errors
def report(config_path, mode, workspace_dir, seed, narrative_id):
    """Print the run manifest and graph summary for a narrative."""
    ws = Workspace(workspace_dir)
    manifest_path = ws.manifest_path(narrative_id)
    if not manifest_path.exists():
        raise ConfigurationError(f"no manifest for {narrative_id!r}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    click.echo(f"narrative: {manifest['narrative_id']}")
    click.echo(f"config fingerprint: {manifest['config_fingerprint']}")
    click.echo(f"cassette sha256: {manifest['cassette_sha256'] or '(none)'}")
    for name, digest in sorted(manifest["artifacts"].items()):
        click.echo(f"artifact {name}: {digest}")
    graph_path = ws.graph_path(narrative_id)
    if graph_path.exists():
        graph = load_graph(graph_path)
        click.echo(
            f"graph: {len(graph.vertices)} vertices, {len(graph.edges)} edges, "
            f"{graph.metadata.components} component(s)"
        )


if __name__ == "__main__":
    main()
