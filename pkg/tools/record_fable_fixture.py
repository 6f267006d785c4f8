#!/usr/bin/env python3
"""Regenerate the bundled fable fixture: cassette plus golden artifacts.

The provider below is a deterministic script, not a live model; it answers
the extraction prompt with hand-written simplified sentences and the
construction prompts with fixed narrative-order rules. Recording through
the real gateway produces a cassette that replays byte-identically, which
is what the offline end-to-end tests exercise.

Run from the repository root:

    python tools/record_fable_fixture.py
"""

import json
import re
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from ncg.builder import build_graph  # noqa: E402
from ncg.config import load_config  # noqa: E402
from ncg.extraction import NarrativeText, extract_vertices  # noqa: E402
from ncg.gateway import Cassette, GatewayMode, LLMGateway  # noqa: E402
from ncg.graphdoc import serialize_graph  # noqa: E402
from ncg.model import DEFAULT_BOND_SCHEMA, STACLabel, bond_allowed  # noqa: E402
from ncg.pipeline import label_vertices, vertices_doc, train_models  # noqa: E402
from ncg.workspace import Workspace  # noqa: E402

FIXTURE_DIR = REPO / "fixtures" / "fable"

# Hand-written simplified sentences per source paragraph, keyed by a
# distinctive substring of that paragraph.
PARAGRAPH_SENTENCES = [
    (
        "farmhouse windowsill",
        [
            "A crow found a piece of cheese on a windowsill.",
            "The crow carried the cheese to a high branch.",
        ],
    ),
    (
        "hungry fox trotted",
        [
            "A hungry fox smelled the cheese.",
            "The fox stopped under the branch.",
            "The fox praised the crow's glossy feathers.",
            "The fox asked the crow for a song.",
        ],
    ),
    (
        "opened its beak",
        [
            "The vain crow opened the beak to sing.",
            "The cheese dropped from the crow's beak.",
            "The fox snatched the cheese.",
            "The fox mocked the vain crow.",
            "The crow learned a hard lesson about flattery.",
        ],
    ),
]

ALL_SENTENCES = [s for _, group in PARAGRAPH_SENTENCES for s in group]
LESSON_INDEX = len(ALL_SENTENCES) - 1  # kept isolated until refinement


class FableScript:
    """Deterministic stand-in provider for the fable recording.

    Edge proposals follow narrative order (a step causes the next one or
    two), except that nothing is proposed for the closing lesson sentence,
    which leaves it isolated for the refinement round to reconnect.
    Counterfactual checks prune the two-step shortcuts.
    """

    def _index(self, text: str) -> int:
        return ALL_SENTENCES.index(text)

    def complete(self, system, prompt, params):
        if "Paragraph:" in prompt:
            for marker, sentences in PARAGRAPH_SENTENCES:
                if marker in prompt:
                    return "\n".join(sentences)
            raise AssertionError("unknown paragraph in extraction prompt")
        if "Does event A cause" in prompt:
            src = self._index(re.search(r'Event A \([^)]*\): "([^"]+)"', prompt).group(1))
            dst = self._index(re.search(r'Event B \([^)]*\): "([^"]+)"', prompt).group(1))
            if LESSON_INDEX in (src, dst):
                return "NO\nThe closing moral stands apart from the chain of events."
            if dst - src in (1, 2):
                return "YES\nThe earlier event directly enables the later one."
            return "NO\nNo direct causal link between these events."
        if "If A did not occur" in prompt:
            src = self._index(re.search(r'Event A: "([^"]+)"', prompt).group(1))
            dst = self._index(re.search(r'Event B: "([^"]+)"', prompt).group(1))
            if dst - src == 2:
                return "YES\nThe later event is already carried by the intervening step."
            return "NO\nWithout the earlier event the later one would not occur."
        if "is isolated" in prompt:
            match = re.search(r"Isolated event (v\d+) \(([^)]+)\)", prompt)
            isolate_label = STACLabel(match.group(2))
            isolate_idx = int(match.group(1)[1:]) - 1
            candidates = re.findall(r"(v\d+): [^\n]+ \(([^)]+)\)", prompt)
            best = None
            for cid, clabel in candidates:
                cidx = int(cid[1:]) - 1
                if bond_allowed(DEFAULT_BOND_SCHEMA, STACLabel(clabel), isolate_label):
                    distance = abs(cidx - isolate_idx)
                    if best is None or distance < best[0]:
                        best = (distance, cid)
            if best is None:
                return "NONE"
            return f"CAUSE: {best[1]}"
        raise AssertionError(f"unexpected prompt: {prompt[:100]}")


def main() -> None:
    config = load_config(FIXTURE_DIR / "config.json")
    body = (FIXTURE_DIR / "fable.txt").read_text(encoding="utf-8")
    params = config.gen_params()

    with tempfile.TemporaryDirectory() as tmp:
        workspace = Workspace(Path(tmp) / "ws").init()
        models_fp = train_models(config, workspace)

        cassette_path = Path(tmp) / "cassette.jsonl"
        gateway = LLMGateway(
            provider=FableScript(),
            cassette=Cassette(cassette_path),
            mode=GatewayMode.RECORD,
        )

        narrative = NarrativeText.from_text("fable", body)
        vertices = extract_vertices(
            narrative, gateway, params, max_vertices=config.max_vertices
        )
        labeled = label_vertices(vertices, config, workspace, models_fp, gold_ei=False)
        graph, trace = build_graph(
            labeled,
            gateway,
            params,
            schema=config.bond_schema_obj(),
            max_refinement_rounds=config.max_refinement_rounds,
            narrative_id="fable",
            config_fingerprint=config.fingerprint(),
        )

        shutil.copy(cassette_path, FIXTURE_DIR / "cassette.jsonl")
        (FIXTURE_DIR / "golden_vertices.json").write_text(
            vertices_doc("fable", labeled), encoding="utf-8"
        )
        (FIXTURE_DIR / "golden_graph.json").write_text(
            serialize_graph(graph), encoding="utf-8"
        )
        (FIXTURE_DIR / "golden_trace.json").write_text(trace.to_json(), encoding="utf-8")

    print(f"vertices: {len(labeled)}")
    print(f"labels: {[v.stac.letter for v in labeled]}")
    print(f"edges: {len(graph.edges)} (components: {graph.metadata.components})")
    print(f"pair evaluations: {trace.pair_evaluations}")
    print(f"pruned: {len(trace.pruned)}; status: {trace.exit_status}")
    print(f"cassette entries: {sum(1 for _ in open(FIXTURE_DIR / 'cassette.jsonl'))}")


if __name__ == "__main__":
    main()
