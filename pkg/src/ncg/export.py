"""DOT rendering of causal graphs (export only, no layout engine)."""

from __future__ import annotations

from typing import Optional, Sequence

from .builder import EdgeProposal
from .model import CausalGraph

LABEL_LIMIT = 60


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", " ")


def _truncate(text: str, limit: int = LABEL_LIMIT) -> str:
    return text if len(text) <= limit else text[: limit - 1] + "\u2026"


def to_dot(
    graph: CausalGraph,
    include_pruned: bool = False,
    pruned: Optional[Sequence[EdgeProposal]] = None,
) -> str:
    """Render the graph as DOT: vertex labels are texts truncated to 60
    characters, edge labels abbreviate the bond (e.g. "A→C"). Pruned
    proposals render dashed when requested."""
    name = _escape(graph.metadata.narrative_id or "causal_graph")
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", "  node [shape=box];"]
    for v in sorted(graph.vertices, key=lambda v: v.id):
        label = _escape(_truncate(v.text))
        lines.append(f'  "{v.id}" [label="{label}"];')
    for e in sorted(graph.edges, key=lambda e: e.key):
        lines.append(f'  "{e.from_id}" -> "{e.to_id}" [label="{e.bond_label}"];')
    if include_pruned and pruned:
        for p in sorted(pruned, key=lambda p: p.key):
            bond = f"{p.bond[0].letter}\u2192{p.bond[1].letter}"
            lines.append(
                f'  "{p.from_id}" -> "{p.to_id}" '
                f'[label="{bond}", style=dashed, color=gray];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"
