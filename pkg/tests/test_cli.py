"""CLI surface: subcommands, exit-code mapping, and report rendering."""

import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from ncg.cli import exit_code_for, main
from ncg.errors import (
    CassetteMissError,
    ConfigurationError,
    ContractError,
    DegenerateAgreementError,
    DegenerateDataError,
    ExtractionError,
    IntegrityError,
    ParseError,
)

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures" / "fable"


@pytest.fixture
def runner():
    return CliRunner()


def _prepare(tmp_path):
    ws_dir = tmp_path / "ws"
    (ws_dir / "cassettes").mkdir(parents=True)
    shutil.copy(FIXTURE_DIR / "cassette.jsonl", ws_dir / "cassettes" / "fable.jsonl")
    return ws_dir


class TestExitCodes:
    def test_mapping(self):
        assert exit_code_for(ConfigurationError("x")) == 1
        assert exit_code_for(CassetteMissError("tpl", "hash")) == 2
        assert exit_code_for(ExtractionError("x")) == 3
        assert exit_code_for(DegenerateDataError("x")) == 4
        assert exit_code_for(ParseError("x")) == 4
        assert exit_code_for(IntegrityError("x")) == 5
        assert exit_code_for(DegenerateAgreementError("x")) == 6
        assert exit_code_for(ContractError("x")) == 6


class TestRunCommand:
    def test_full_run_and_report(self, runner, tmp_path):
        ws_dir = _prepare(tmp_path)
        result = runner.invoke(
            main,
            [
                "run", str(FIXTURE_DIR / "fable.txt"),
                "--config", str(FIXTURE_DIR / "config.json"),
                "--workspace", str(ws_dir),
                "--train-first",
            ],
        )
        assert result.exit_code == 0, result.output
        assert "build-graph: ran" in result.output

        report = runner.invoke(main, ["report", "fable", "--workspace", str(ws_dir)])
        assert report.exit_code == 0, report.output
        assert "config fingerprint" in report.output
        assert "graph: 11 vertices" in report.output

    def test_missing_models_exit_code_1(self, runner, tmp_path):
        ws_dir = _prepare(tmp_path)
        result = runner.invoke(
            main,
            [
                "run", str(FIXTURE_DIR / "fable.txt"),
                "--config", str(FIXTURE_DIR / "config.json"),
                "--workspace", str(ws_dir),
            ],
        )
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_replay_miss_exit_code_2(self, runner, tmp_path):
        ws_dir = tmp_path / "empty-ws"
        result = runner.invoke(
            main,
            [
                "run", str(FIXTURE_DIR / "fable.txt"),
                "--config", str(FIXTURE_DIR / "config.json"),
                "--workspace", str(ws_dir),
                "--train-first",
            ],
        )
        assert result.exit_code == 2


class TestStageCommands:
    def test_ingest_extract_label_build_export(self, runner, tmp_path):
        ws_dir = _prepare(tmp_path)
        config = ["--config", str(FIXTURE_DIR / "config.json")]
        ws = ["--workspace", str(ws_dir)]

        assert runner.invoke(
            main,
            ["ingest", str(FIXTURE_DIR / "fable.txt"),
             "--cassette", str(FIXTURE_DIR / "cassette.jsonl"), *ws],
        ).exit_code == 0

        assert runner.invoke(main, ["train", *config, *ws]).exit_code == 0

        extract = runner.invoke(main, ["extract", "fable", *config, *ws])
        assert extract.exit_code == 0, extract.output
        assert "11 vertices" in extract.output

        label = runner.invoke(main, ["label", "fable", *config, *ws])
        assert label.exit_code == 0, label.output

        build = runner.invoke(main, ["build-graph", "fable", *config, *ws])
        assert build.exit_code == 0, build.output
        assert "11 vertices" in build.output

        dot = runner.invoke(main, ["export-dot", "fable", *ws, "--include-pruned"])
        assert dot.exit_code == 0, dot.output
        dot_text = (ws_dir / "graphs" / "fable.dot").read_text(encoding="utf-8")
        assert "digraph" in dot_text
        assert "style=dashed" in dot_text  # pruned proposals rendered

    def test_extract_requires_ingested_narrative(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["extract", "ghost", "--workspace", str(tmp_path / "ws"),
             "--config", str(FIXTURE_DIR / "config.json")],
        )
        assert result.exit_code == 1


class TestKappaCommand:
    def test_kappa_from_annotation_file(self, runner, tmp_path):
        path = tmp_path / "annotations.tsv"
        rows = ["item_id\tannotator_id\tlabel"]
        for i in range(10):
            rows.append(f"i{i}\talice\t{'A' if i < 6 else 'B'}")
            rows.append(f"i{i}\tbob\t{'A' if i < 5 else 'B'}")
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        result = runner.invoke(
            main, ["kappa", str(path), "--annotator-a", "alice", "--annotator-b", "bob"]
        )
        assert result.exit_code == 0, result.output
        assert "kappa:" in result.output
        assert "n=10" in result.output

    def test_unknown_annotator_exit_code_6(self, runner, tmp_path):
        path = tmp_path / "annotations.tsv"
        path.write_text("item_id\tannotator_id\tlabel\ni1\talice\tA\n", encoding="utf-8")
        result = runner.invoke(
            main, ["kappa", str(path), "--annotator-a", "alice", "--annotator-b", "carol"]
        )
        assert result.exit_code == 6


class TestAblateCommand:
    def test_small_ablation_writes_reports(self, runner, tmp_path):
        dataset = tmp_path / "data.tsv"
        from ncg.datasets import ei_governed_dataset, save_dataset_tsv, DatasetRow

        rows = [
            DatasetRow(text=r.text, expert_index=r.expert_index, stac=r.stac)
            for r in ei_governed_dataset(n=120, seed=0)
        ]
        save_dataset_tsv(rows, dataset)
        ws_dir = tmp_path / "ws"
        result = runner.invoke(
            main,
            [
                "ablate", "--dataset", str(dataset), "--seeds", "0",
                "--variants", "tree-ei-only",
                "--workspace", str(ws_dir),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "tree-ei-only" in result.output
        report = json.loads((ws_dir / "reports" / "ablation.json").read_text())
        assert report["seeds"] == [0]
        assert (ws_dir / "reports" / "ablation.tsv").exists()

    def test_unknown_variant_exit_code_1(self, runner, tmp_path):
        dataset = tmp_path / "data.tsv"
        dataset.write_text("bogus", encoding="utf-8")
        result = runner.invoke(
            main, ["ablate", "--dataset", str(dataset), "--variants", "mega"]
        )
        assert result.exit_code in (1, 6)  # config error or dataset contract error


class TestJudgeCommand:
    def test_judge_replay_miss_maps_to_gateway_exit(self, runner, tmp_path):
        from conftest import make_graph
        from ncg.graphdoc import save_graph

        story = tmp_path / "story.txt"
        story.write_text("A tale.", encoding="utf-8")
        a_path, b_path = tmp_path / "a.json", tmp_path / "b.json"
        save_graph(make_graph(2, edges=[("v001", "v002")], narrative_id="a"), a_path)
        save_graph(make_graph(3, edges=[("v001", "v002")], narrative_id="b"), b_path)
        result = runner.invoke(
            main,
            [
                "judge", "--story", str(story),
                "--graph-a", str(a_path), "--graph-b", str(b_path),
                "--workspace", str(tmp_path / "ws"),
            ],
        )
        assert result.exit_code == 2  # empty cassette in replay mode
