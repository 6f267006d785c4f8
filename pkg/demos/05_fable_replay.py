"""
Offline end-to-end run: the bundled fable
=========================================

The repository ships a short fable together with a recorded cassette of
every model exchange, so the whole pipeline (extract -> label -> build ->
export) replays deterministically with zero network access. Running this
script twice produces byte-identical graph documents.
"""

import shutil
import tempfile
from pathlib import Path

from ncg.config import load_config
from ncg.export import to_dot
from ncg.graphdoc import load_graph
from ncg.pipeline import run_pipeline
from ncg.workspace import Workspace

FIXTURE = Path(__file__).parent.parent / "fixtures" / "fable"

with tempfile.TemporaryDirectory() as tmp:
    workspace = Workspace(Path(tmp) / "workspace").init()
    shutil.copy(FIXTURE / "cassette.jsonl", workspace.cassette_path("fable"))

    config = load_config(FIXTURE / "config.json")
    result = run_pipeline(FIXTURE / "fable.txt", config, workspace, train_first=True)

    for stage, status in result.stages.items():
        print(f"{stage:<12} {status}")

    graph = load_graph(result.graph_path)
    print(f"\n{len(graph.vertices)} vertices, {len(graph.edges)} edges, "
          f"{graph.metadata.components} component(s)")
    for edge in graph.edges:
        u = graph.vertex(edge.from_id)
        v = graph.vertex(edge.to_id)
        print(f"  [{edge.bond_label}] {u.text}  ->  {v.text}")

    print("\nDOT rendering:\n")
    print(to_dot(graph))
