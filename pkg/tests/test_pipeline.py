"""End-to-end pipeline: golden fable replay, fingerprint gating, manifest
determinism, configuration validation, and workspace locking."""

import json
import shutil
from pathlib import Path

import pytest

from ncg.config import PipelineConfig, config_from_dict, load_config, save_config
from ncg.errors import ConfigurationError, WorkspaceLockedError
from ncg.pipeline import run_pipeline, train_models
from ncg.workspace import Workspace

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures" / "fable"


@pytest.fixture(scope="module")
def fable_config() -> PipelineConfig:
    return load_config(FIXTURE_DIR / "config.json")


def _prepared_workspace(tmp_path, name="ws") -> Workspace:
    ws = Workspace(tmp_path / name).init()
    shutil.copy(FIXTURE_DIR / "cassette.jsonl", ws.cassette_path("fable"))
    return ws


class TestGoldenReplay:
    def test_replay_matches_committed_golden_graph(self, tmp_path, fable_config):
        ws = _prepared_workspace(tmp_path)
        result = run_pipeline(
            FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True
        )
        golden = (FIXTURE_DIR / "golden_graph.json").read_text(encoding="utf-8")
        produced = result.graph_path.read_text(encoding="utf-8")
        assert produced == golden

    def test_replay_matches_committed_golden_trace(self, tmp_path, fable_config):
        ws = _prepared_workspace(tmp_path)
        result = run_pipeline(
            FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True
        )
        golden = (FIXTURE_DIR / "golden_trace.json").read_text(encoding="utf-8")
        assert result.trace_path.read_text(encoding="utf-8") == golden

    def test_two_fresh_replays_byte_identical(self, tmp_path, fable_config):
        outputs = []
        for name in ("ws-a", "ws-b"):
            ws = _prepared_workspace(tmp_path, name)
            result = run_pipeline(
                FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True
            )
            outputs.append(
                (
                    result.graph_path.read_text(encoding="utf-8"),
                    result.manifest_path.read_text(encoding="utf-8"),
                )
            )
        assert outputs[0][0] == outputs[1][0]
        assert outputs[0][1] == outputs[1][1]

    def test_rerun_is_all_cache_hits_with_zero_gateway_calls(self, tmp_path, fable_config):
        ws = _prepared_workspace(tmp_path)
        first = run_pipeline(FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True)
        assert first.stages["extract"] == "ran"
        assert first.gateway_completions > 0

        second = run_pipeline(FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True)
        for stage in ("ingest", "extract", "label", "build-graph", "export"):
            assert second.stages[stage] == "cache-hit", stage
        assert second.gateway_completions == 0
        assert (
            first.manifest_path.read_text(encoding="utf-8")
            == second.manifest_path.read_text(encoding="utf-8")
        )

    def test_vertices_match_golden(self, tmp_path, fable_config):
        ws = _prepared_workspace(tmp_path)
        run_pipeline(FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True)
        golden = (FIXTURE_DIR / "golden_vertices.json").read_text(encoding="utf-8")
        assert ws.labeled_path("fable").read_text(encoding="utf-8") == golden

    def test_config_fingerprint_echoed_into_graph(self, tmp_path, fable_config):
        ws = _prepared_workspace(tmp_path)
        result = run_pipeline(FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True)
        doc = json.loads(result.graph_path.read_text(encoding="utf-8"))
        assert doc["metadata"]["config_fingerprint"] == fable_config.fingerprint()


class TestPreconditions:
    def test_live_mode_without_key_fails_before_any_stage(self, tmp_path, monkeypatch):
        monkeypatch.delenv("NCG_LLM_API_KEY", raising=False)
        monkeypatch.delenv("NCG_LLM_BASE_URL", raising=False)
        config = PipelineConfig(mode="live")
        ws = Workspace(tmp_path / "ws")
        with pytest.raises(ConfigurationError, match="NCG_LLM"):
            run_pipeline(FIXTURE_DIR / "fable.txt", config, ws)
        assert not (tmp_path / "ws" / "corpus").exists()

    def test_missing_models_without_train_first(self, tmp_path, fable_config):
        ws = _prepared_workspace(tmp_path)
        with pytest.raises(ConfigurationError, match="train"):
            run_pipeline(FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=False)

    def test_replay_without_cassette_maps_to_gateway_error(self, tmp_path, fable_config):
        from ncg.errors import CassetteMissError

        ws = Workspace(tmp_path / "ws").init()  # no cassette installed
        with pytest.raises(CassetteMissError):
            run_pipeline(FIXTURE_DIR / "fable.txt", fable_config, ws, train_first=True)


class TestModelTraining:
    def test_train_models_is_fingerprint_gated(self, tmp_path, fable_config):
        ws = Workspace(tmp_path / "ws").init()
        fp1 = train_models(fable_config, ws)
        fp2 = train_models(fable_config, ws)
        assert fp1 == fp2
        assert ws.models_fingerprint() == fp1

    def test_stale_models_detected(self, tmp_path, fable_config):
        ws = Workspace(tmp_path / "ws").init()
        train_models(fable_config, ws)
        with pytest.raises(ConfigurationError, match="stale"):
            ws.load_models(expected_fingerprint="different")


class TestWorkspace:
    def test_lock_excludes_concurrent_runs(self, tmp_path):
        ws = Workspace(tmp_path / "ws").init()
        with ws.lock():
            with pytest.raises(WorkspaceLockedError):
                with ws.lock():
                    pass
        # released on exit
        with ws.lock():
            pass

    def test_artifact_freshness(self, tmp_path):
        ws = Workspace(tmp_path / "ws").init()
        artifact = ws.vertices_path("x")
        assert not ws.is_fresh(artifact, "fp1")
        ws.write_artifact(artifact, "content", "fp1")
        assert ws.is_fresh(artifact, "fp1")
        assert not ws.is_fresh(artifact, "fp2")


class TestConfig:
    def test_round_trip(self, tmp_path, fable_config):
        path = tmp_path / "c.json"
        save_config(fable_config, path)
        assert load_config(path) == fable_config

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match="unknown config key"):
            config_from_dict({"version": 1, "typo_key": 3})

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigurationError, match="mode"):
            config_from_dict({"version": 1, "mode": "offline"})

    def test_bad_variant_rejected(self):
        with pytest.raises(ConfigurationError, match="stac_variant"):
            config_from_dict({"version": 1, "stac_variant": "mega-tree"})

    def test_bad_eventivity_arity_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"version": 1, "eventivity_arity": 4})

    def test_fingerprint_stable_and_sensitive(self, fable_config):
        assert fable_config.fingerprint() == fable_config.fingerprint()
        changed = fable_config.with_mode("record")
        assert changed.fingerprint() != fable_config.fingerprint()

    def test_bond_schema_override(self):
        config = config_from_dict(
            {"version": 1, "bond_schema": [["Action", "Consequence"]]}
        )
        schema = config.bond_schema_obj()
        assert len(schema.allowed) == 1

    def test_tree_params_from_config(self, fable_config):
        params = fable_config.tree_params()
        assert params.max_depth == 6
        assert params.n_trees == 200
        assert params.learning_rate == 0.1
        assert params.l2 == 1.0

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "nope.json")
