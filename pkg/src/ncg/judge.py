"""Pairwise graph judging across eight quality dimensions, win-rate
aggregation, and rubric scoring for narrative summaries.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import ContractError, DegeneratePairError, ParseError, PartialJudgeError
from .gateway import GenerationParams, LLMGateway
from .graphdoc import serialize_graph
from .model import CausalGraph
from .prompts import PromptSpec

JUDGING_DIMENSIONS: tuple[str, ...] = (
    "Causality vs. Chronology",
    "Explicit Motivations/Intent",
    "Granularity (Level of Detail)",
    "Logical Completeness",
    "Hierarchy or Grouping",
    "Accuracy of Connections",
    "Decision Points as Branches",
    "Ease of Reading",
)


class JudgeKind(Enum):
    HUMAN = "human"
    LLM = "llm"


class Winner(Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class DimensionVerdict:
    narrative_id: str
    dimension: str
    winner: Winner
    judge: JudgeKind = JudgeKind.LLM

    def __post_init__(self):
        if self.dimension not in JUDGING_DIMENSIONS:
            raise ContractError(f"unknown judging dimension: {self.dimension!r}")


_VERDICT_LINE = re.compile(r"^\s*(\d+)\s*[:.)-]\s*Graph\s*([12])\s*$", re.IGNORECASE | re.MULTILINE)


def judge_pair(
    story: str,
    graph_a: CausalGraph,
    graph_b: CausalGraph,
    gateway: LLMGateway,
    params: GenerationParams,
    narrative_id: str = "",
    seed: int = 0,
) -> list[DimensionVerdict]:
    """One verdict per dimension for graph A versus graph B.

    Presentation order is randomized per narrative (seeded) to guard
    against judge position bias; verdicts are mapped back to A/B before
    returning. Identical documents are refused outright: a judge cannot
    meaningfully order a pair against itself.
    """
    doc_a = serialize_graph(graph_a)
    doc_b = serialize_graph(graph_b)
    if doc_a == doc_b:
        raise DegeneratePairError(
            f"graphs for narrative {narrative_id!r} are identical; refusing to judge"
        )
    rng = random.Random(f"{seed}:{narrative_id}")
    swapped = rng.random() < 0.5
    first, second = (doc_b, doc_a) if swapped else (doc_a, doc_b)

    response = gateway.complete(
        PromptSpec(
            template_id="graph_judging",
            variables={"story": story, "graph_a": first, "graph_b": second},
        ),
        params,
    )

    by_dimension: dict[int, Winner] = {}
    for number, graph_number in _VERDICT_LINE.findall(response):
        idx = int(number) - 1
        if not 0 <= idx < len(JUDGING_DIMENSIONS):
            continue
        picked_first = graph_number == "1"
        picked_a = picked_first != swapped
        by_dimension[idx] = Winner.A if picked_a else Winner.B

    missing = [
        JUDGING_DIMENSIONS[i]
        for i in range(len(JUDGING_DIMENSIONS))
        if i not in by_dimension
    ]
    if missing:
        raise PartialJudgeError(missing, raw_text=response)

    return [
        DimensionVerdict(
            narrative_id=narrative_id,
            dimension=JUDGING_DIMENSIONS[i],
            winner=by_dimension[i],
        )
        for i in range(len(JUDGING_DIMENSIONS))
    ]


@dataclass(frozen=True)
class WinRateTable:
    """Per-dimension percentage of narratives where system A won."""

    rates: dict[str, float]
    n_narratives: int

    def render(self) -> str:
        width = max(len(d) for d in JUDGING_DIMENSIONS) + 2
        lines = [f"{'Dimension':<{width}}{'Win rate (A)':>12}"]
        for dimension in JUDGING_DIMENSIONS:
            if dimension in self.rates:
                lines.append(f"{dimension:<{width}}{self.rates[dimension]:>11.0f}%")
        lines.append(f"(n = {self.n_narratives} narratives)")
        return "\n".join(lines)


def win_rate_table(verdicts: Sequence[DimensionVerdict]) -> WinRateTable:
    if not verdicts:
        raise ContractError("win_rate_table requires at least one verdict")
    narratives = {v.narrative_id for v in verdicts}
    rates: dict[str, float] = {}
    for dimension in JUDGING_DIMENSIONS:
        relevant = [v for v in verdicts if v.dimension == dimension]
        if not relevant:
            continue
        wins = sum(1 for v in relevant if v.winner is Winner.A)
        rates[dimension] = 100.0 * wins / len(relevant)
    return WinRateTable(rates=rates, n_narratives=len(narratives))


_SCORES_RE = re.compile(
    r"scores?\s*[:=]?\s*(\d+(?:\.\d+)?)\s*[,/]\s*(\d+(?:\.\d+)?)\s*[,/]\s*(\d+(?:\.\d+)?)",
    re.IGNORECASE,
)

RUBRIC_DIMENSIONS = (
    "conciseness_and_sentence_structure",
    "coverage_and_coherence",
    "information_span_and_economy",
)


def _parse_scores(response: str) -> tuple[float, float, float]:
    match = _SCORES_RE.search(response)
    if match is None:
        # bare "5, 5, 5" style
        match = re.search(
            r"(\d+(?:\.\d+)?)\s*,\s*(\d+(?:\.\d+)?)\s*,\s*(\d+(?:\.\d+)?)", response
        )
    if match is None:
        raise ParseError("no rubric scores found in judge response", raw_text=response)
    values = tuple(float(g) for g in match.groups())
    for v in values:
        if not 0 <= v <= 5:
            raise ParseError(f"rubric score {v} outside [0, 5]", raw_text=response)
        if (v * 2) != int(v * 2):
            raise ParseError(
                f"rubric score {v} is not an integer or half point", raw_text=response
            )
    return values  # type: ignore[return-value]


def rubric_score_summary(
    summary: str,
    gateway: LLMGateway,
    judge_params: Sequence[GenerationParams] | GenerationParams,
) -> tuple[float, float, float]:
    """Three rubric scores in [0, 5], averaged across the configured judge
    models when several are given."""
    if not summary.strip():
        raise ContractError("summary must be nonempty")
    if isinstance(judge_params, GenerationParams):
        judge_params = [judge_params]
    if not judge_params:
        raise ContractError("at least one judge model is required")
    totals = [0.0, 0.0, 0.0]
    for params in judge_params:
        response = gateway.complete(
            PromptSpec(template_id="summary_rubric", variables={"summary": summary}),
            params,
        )
        scores = _parse_scores(response)
        for i, s in enumerate(scores):
            totals[i] += s
    n = len(judge_params)
    return (totals[0] / n, totals[1] / n, totals[2] / n)
