"""Iterative causal-graph assembly.

Five stages: (1) condition the conversation on the bond schema, (2)
propose edges over every unordered vertex pair, querying only
schema-valid directions, (3) prune proposals that fail the counterfactual
test, (4) revisit isolated vertices with a bounded number of "why"
rounds, (5) finalize with duplicate removal, schema verification, and a
connectivity report.

Verdict parsing is deliberately asymmetric: an unparseable proposal
answer yields no edge (edges need positive evidence to exist), while an
unparseable prune answer keeps the edge (deletions need positive
evidence too). Both cases are counted in the trace.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Sequence

from .errors import ConfigurationError, ContractError
from .gateway import GenerationParams, LLMGateway
from .model import (
    Bond,
    BondSchema,
    BOND_DEFINITIONS,
    CausalEdge,
    CausalGraph,
    DEFAULT_BOND_SCHEMA,
    GraphMetadata,
    Vertex,
    bond_allowed,
)
from .prompts import PromptSpec, render_prompt

logger = logging.getLogger(__name__)

DEFAULT_MAX_REFINEMENT_ROUNDS = 2


class ProposalVerdict(Enum):
    PROPOSED = "proposed"
    PRUNED = "pruned"
    CONFIRMED = "confirmed"


@dataclass(frozen=True)
class EdgeProposal:
    from_id: str
    to_id: str
    bond: Bond
    llm_rationale: str = ""
    verdict: ProposalVerdict = ProposalVerdict.PROPOSED

    @property
    def key(self) -> tuple[str, str]:
        return (self.from_id, self.to_id)

    def as_edge(self, origin_iteration: int) -> CausalEdge:
        return CausalEdge(
            from_id=self.from_id,
            to_id=self.to_id,
            bond=self.bond,
            origin_iteration=origin_iteration,
            rationale=self.llm_rationale or None,
        )


@dataclass
class BuildTrace:
    """Everything needed to audit a build: per-iteration edge snapshots,
    isolate lists per refinement round, parse-failure counts, and the
    cassette hashes of every exchange."""

    narrative_id: str = ""
    pair_evaluations: int = 0
    snapshots: dict[int, list[dict]] = field(default_factory=dict)
    isolated_rounds: list[list[str]] = field(default_factory=list)
    remaining_isolates: list[str] = field(default_factory=list)
    unparsed_proposals: int = 0
    unparsed_prunes: int = 0
    pruned: list[EdgeProposal] = field(default_factory=list)
    rejected_refinements: list[dict] = field(default_factory=list)
    request_hashes: list[str] = field(default_factory=list)
    exit_status: str = "ok"

    def snapshot(self, iteration: int, edges: Sequence[EdgeProposal | CausalEdge]) -> None:
        rows = []
        for e in edges:
            rows.append(
                {
                    "from": e.from_id,
                    "to": e.to_id,
                    "bond": [e.bond[0].value, e.bond[1].value],
                }
            )
        self.snapshots[iteration] = sorted(rows, key=lambda r: (r["from"], r["to"]))

    def edge_keys(self, iteration: int) -> set[tuple[str, str]]:
        return {(r["from"], r["to"]) for r in self.snapshots.get(iteration, [])}

    def to_dict(self) -> dict:
        return {
            "narrative_id": self.narrative_id,
            "pair_evaluations": self.pair_evaluations,
            "snapshots": {str(k): v for k, v in sorted(self.snapshots.items())},
            "isolated_rounds": self.isolated_rounds,
            "remaining_isolates": self.remaining_isolates,
            "unparsed": {
                "proposals": self.unparsed_proposals,
                "prunes": self.unparsed_prunes,
            },
            "pruned": [
                {"from": p.from_id, "to": p.to_id, "bond": [p.bond[0].value, p.bond[1].value]}
                for p in sorted(self.pruned, key=lambda p: p.key)
            ],
            "rejected_refinements": self.rejected_refinements,
            "request_hashes": self.request_hashes,
            "exit_status": self.exit_status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class BondConversation:
    """Handle carrying the schema-conditioning system message."""

    schema: BondSchema
    system_preamble: str


def bond_table_text(schema: BondSchema) -> str:
    lines = []
    for pair in schema.sorted_pairs():
        definition = BOND_DEFINITIONS.get(pair, "a valid causal bond")
        lines.append(f"- {pair[0].value} -> {pair[1].value}: {definition}")
    return "\n".join(lines)


def condition_bond_schema(
    gateway: LLMGateway, schema: BondSchema = DEFAULT_BOND_SCHEMA
) -> BondConversation:
    """Install the bond table as the system context for every later call."""
    if not schema.allowed:
        raise ConfigurationError("cannot condition on an empty bond schema")
    rendered = render_prompt(
        PromptSpec(
            template_id="bond_conditioning",
            variables={"bond_table": bond_table_text(schema)},
        )
    )
    return BondConversation(schema=schema, system_preamble=rendered)


_VERDICT_RE = re.compile(r"^\s*(yes|no)\b", re.IGNORECASE)


def parse_yes_no(response: str) -> Optional[bool]:
    """First-line YES/NO; None when the answer does not commit."""
    lines = response.strip().splitlines()
    if not lines:
        return None
    match = _VERDICT_RE.match(lines[0])
    if match is None:
        return None
    return match.group(1).lower() == "yes"


def _rationale(response: str) -> str:
    lines = response.strip().splitlines()
    if not lines:
        return ""
    first = _VERDICT_RE.sub("", lines[0]).strip(" .,:;-")
    rest = " ".join(line.strip() for line in lines[1:] if line.strip())
    return (first + " " + rest).strip()


def propose_edges(
    vertices: Sequence[Vertex],
    handle: BondConversation,
    gateway: LLMGateway,
    params: GenerationParams,
    trace: Optional[BuildTrace] = None,
) -> list[EdgeProposal]:
    """Evaluate every unordered vertex pair once.

    Both directions of a pair are considered, but a direction is only sent
    to the model when its bond is schema-valid, so exactly n(n-1)/2 pair
    evaluations happen regardless of how many prompts go out.
    """
    unlabeled = [v.id for v in vertices if v.stac is None]
    if unlabeled:
        raise ContractError(f"vertices missing STAC labels: {unlabeled}")
    trace = trace if trace is not None else BuildTrace()
    proposals: list[EdgeProposal] = []
    for i in range(len(vertices)):
        for j in range(i + 1, len(vertices)):
            trace.pair_evaluations += 1
            for u, v in ((vertices[i], vertices[j]), (vertices[j], vertices[i])):
                if not bond_allowed(handle.schema, u.stac, v.stac):
                    continue
                response = gateway.complete(
                    PromptSpec(
                        template_id="edge_proposal",
                        variables={
                            "from_text": u.text,
                            "from_label": u.stac.value,
                            "to_text": v.text,
                            "to_label": v.stac.value,
                        },
                        system_preamble=handle.system_preamble,
                    ),
                    params,
                )
                verdict = parse_yes_no(response)
                if verdict is None:
                    trace.unparsed_proposals += 1
                    logger.warning(
                        "unparseable proposal verdict for %s->%s; recording no edge",
                        u.id, v.id,
                    )
                elif verdict:
                    proposals.append(
                        EdgeProposal(
                            from_id=u.id,
                            to_id=v.id,
                            bond=(u.stac, v.stac),
                            llm_rationale=_rationale(response),
                        )
                    )
    trace.snapshot(2, proposals)
    return proposals


def _counterfactual_keep(
    cause_text: str,
    effect_text: str,
    handle: BondConversation,
    gateway: LLMGateway,
    params: GenerationParams,
    trace: BuildTrace,
) -> bool:
    """True when the edge survives: the effect would NOT happen without
    the cause. An uncommitted answer keeps the edge (fail-open)."""
    response = gateway.complete(
        PromptSpec(
            template_id="counterfactual_prune",
            variables={"cause_text": cause_text, "effect_text": effect_text},
            system_preamble=handle.system_preamble,
        ),
        params,
    )
    verdict = parse_yes_no(response)
    if verdict is None:
        trace.unparsed_prunes += 1
        logger.warning("unparseable counterfactual verdict; keeping edge")
        return True
    return not verdict


def prune_counterfactual(
    proposals: Sequence[EdgeProposal],
    vertices: Sequence[Vertex],
    handle: BondConversation,
    gateway: LLMGateway,
    params: GenerationParams,
    trace: Optional[BuildTrace] = None,
) -> list[EdgeProposal]:
    """Re-examine every proposal with the counterfactual question; returns
    the confirmed subset. Pruned proposals land in the trace."""
    trace = trace if trace is not None else BuildTrace()
    by_id = {v.id: v for v in vertices}
    confirmed: list[EdgeProposal] = []
    for proposal in proposals:
        keep = _counterfactual_keep(
            by_id[proposal.from_id].text,
            by_id[proposal.to_id].text,
            handle, gateway, params, trace,
        )
        if keep:
            confirmed.append(
                EdgeProposal(
                    from_id=proposal.from_id,
                    to_id=proposal.to_id,
                    bond=proposal.bond,
                    llm_rationale=proposal.llm_rationale,
                    verdict=ProposalVerdict.CONFIRMED,
                )
            )
        else:
            trace.pruned.append(
                EdgeProposal(
                    from_id=proposal.from_id,
                    to_id=proposal.to_id,
                    bond=proposal.bond,
                    llm_rationale=proposal.llm_rationale,
                    verdict=ProposalVerdict.PRUNED,
                )
            )
    trace.snapshot(3, confirmed)
    return confirmed


_REFINE_LINE = re.compile(r"^\s*(CAUSE|EFFECT)\s*:\s*(\S+)\s*$", re.IGNORECASE | re.MULTILINE)


def refine_isolated(
    graph: CausalGraph,
    handle: BondConversation,
    gateway: LLMGateway,
    params: GenerationParams,
    max_rounds: int = DEFAULT_MAX_REFINEMENT_ROUNDS,
    trace: Optional[BuildTrace] = None,
) -> CausalGraph:
    """Ask "why" about each degree-0 vertex, at most `max_rounds` passes.

    Every solicited candidate must pass the schema gate and the
    counterfactual filter before admission; admitted edges carry
    origin_iteration 4. Leftover isolates are reported, not forced.
    """
    trace = trace if trace is not None else BuildTrace()
    by_id = {v.id: v for v in graph.vertices}
    edges = list(graph.edges)

    for _ in range(max_rounds):
        existing = {e.key for e in edges}
        touched = {x for e in edges for x in (e.from_id, e.to_id)}
        isolates = [v for v in graph.vertices if v.id not in touched]
        trace.isolated_rounds.append([v.id for v in isolates])
        if not isolates:
            break
        added_any = False
        for isolate in isolates:
            others = [v for v in graph.vertices if v.id != isolate.id]
            candidates = "\n".join(
                f"{v.id}: {v.text} ({v.stac.value if v.stac else 'unlabeled'})"
                for v in others
            )
            response = gateway.complete(
                PromptSpec(
                    template_id="isolate_why",
                    variables={
                        "vertex_id": isolate.id,
                        "vertex_label": isolate.stac.value if isolate.stac else "unlabeled",
                        "vertex_text": isolate.text,
                        "candidates": candidates,
                    },
                    system_preamble=handle.system_preamble,
                ),
                params,
            )
            for kind, other_id in _REFINE_LINE.findall(response):
                other = by_id.get(other_id)
                if other is None or other.id == isolate.id:
                    trace.rejected_refinements.append(
                        {"isolate": isolate.id, "candidate": other_id, "reason": "unknown-vertex"}
                    )
                    continue
                if kind.upper() == "CAUSE":
                    src, dst = other, isolate
                else:
                    src, dst = isolate, other
                if (src.id, dst.id) in existing:
                    continue
                if src.stac is None or dst.stac is None or not bond_allowed(
                    handle.schema, src.stac, dst.stac
                ):
                    trace.rejected_refinements.append(
                        {"isolate": isolate.id, "candidate": other_id, "reason": "schema"}
                    )
                    logger.warning(
                        "refinement candidate %s->%s violates the bond schema; rejected",
                        src.id, dst.id,
                    )
                    continue
                if not _counterfactual_keep(
                    src.text, dst.text, handle, gateway, params, trace
                ):
                    trace.rejected_refinements.append(
                        {"isolate": isolate.id, "candidate": other_id, "reason": "counterfactual"}
                    )
                    continue
                edges.append(
                    CausalEdge(
                        from_id=src.id,
                        to_id=dst.id,
                        bond=(src.stac, dst.stac),
                        origin_iteration=4,
                    )
                )
                existing.add((src.id, dst.id))
                added_any = True
        if not added_any:
            break

    touched = {x for e in edges for x in (e.from_id, e.to_id)}
    trace.remaining_isolates = sorted(
        v.id for v in graph.vertices if v.id not in touched
    )
    trace.snapshot(4, edges)
    return CausalGraph(vertices=graph.vertices, edges=tuple(edges), metadata=graph.metadata)


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def finalize_graph(
    graph: CausalGraph,
    trace: BuildTrace,
    schema: BondSchema = DEFAULT_BOND_SCHEMA,
    narrative_id: str = "",
    generated_at: str = "",
    config_fingerprint: str = "",
) -> CausalGraph:
    """Deduplicate, verify every bond against the schema, and report weak
    connectivity. Disconnection is a warning in the trace, never an error:
    inventing edges to force connectivity would defeat the pruning."""
    seen: set[tuple[str, str]] = set()
    deduped: list[CausalEdge] = []
    for e in graph.edges:
        if e.key in seen:
            continue
        seen.add(e.key)
        deduped.append(e)

    components = None
    final = CausalGraph(
        vertices=graph.vertices,
        edges=tuple(deduped),
        metadata=graph.metadata,
    )
    final.validate(schema)
    component_sets = final.weak_components()
    components = len(component_sets)
    if components > 1:
        trace.exit_status = "disconnected-warning"
        logger.warning(
            "final graph is disconnected: %d components (sizes %s)",
            components, [len(c) for c in component_sets],
        )
    metadata = GraphMetadata(
        narrative_id=narrative_id or graph.metadata.narrative_id,
        generated_at=generated_at or _utcnow(),
        config_fingerprint=config_fingerprint or graph.metadata.config_fingerprint,
        components=components,
    )
    trace.narrative_id = metadata.narrative_id
    return CausalGraph(vertices=final.vertices, edges=final.edges, metadata=metadata)


def build_graph(
    vertices: Sequence[Vertex],
    gateway: LLMGateway,
    params: GenerationParams,
    schema: BondSchema = DEFAULT_BOND_SCHEMA,
    max_refinement_rounds: int = DEFAULT_MAX_REFINEMENT_ROUNDS,
    narrative_id: str = "",
    config_fingerprint: str = "",
) -> tuple[CausalGraph, BuildTrace]:
    """Run the full five-stage protocol over labeled vertices."""
    trace = BuildTrace(narrative_id=narrative_id)
    gateway.reset_usage()
    handle = condition_bond_schema(gateway, schema)
    proposals = propose_edges(vertices, handle, gateway, params, trace)
    confirmed = prune_counterfactual(proposals, vertices, handle, gateway, params, trace)
    interim = CausalGraph(
        vertices=tuple(vertices),
        edges=tuple(p.as_edge(origin_iteration=2) for p in confirmed),
        metadata=GraphMetadata(narrative_id=narrative_id),
    )
    refined = refine_isolated(
        interim, handle, gateway, params, max_rounds=max_refinement_rounds, trace=trace
    )
    trace.request_hashes = [u.request_hash for u in gateway.usage]
    generated_at = gateway.newest_usage_timestamp()
    final = finalize_graph(
        refined,
        trace,
        schema=schema,
        narrative_id=narrative_id,
        generated_at=generated_at,
        config_fingerprint=config_fingerprint,
    )
    return final, trace
