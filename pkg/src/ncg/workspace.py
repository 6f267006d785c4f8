"""Workspace layout, stage-fingerprint gating, the run lock, and model
artifact persistence."""

from __future__ import annotations

import hashlib
import json
import os
import pickle
from contextlib import contextmanager
from pathlib import Path

from .errors import ConfigurationError, WorkspaceLockedError

SUBDIRS = ("corpus", "vertices", "models", "graphs", "traces", "cassettes", "reports")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return sha256_bytes(fh.read())


def sha256_text(text: str) -> str:
    return sha256_bytes(text.encode("utf-8"))


class Workspace:
    """A directory tree of content-addressed pipeline artifacts.

    Every artifact carries a `.fp` sidecar naming the fingerprint of the
    inputs that produced it; a stage whose fingerprint matches skips
    itself entirely.
    """

    def __init__(self, root):
        self.root = Path(root)

    def init(self) -> "Workspace":
        for name in SUBDIRS:
            (self.root / name).mkdir(parents=True, exist_ok=True)
        return self

    def dir(self, name: str) -> Path:
        if name not in SUBDIRS:
            raise ConfigurationError(f"unknown workspace subdir {name!r}")
        return self.root / name

    # artifact paths, one naming rule per stage
    def corpus_path(self, narrative_id: str) -> Path:
        return self.root / "corpus" / f"{narrative_id}.txt"

    def vertices_path(self, narrative_id: str) -> Path:
        return self.root / "vertices" / f"{narrative_id}.json"

    def labeled_path(self, narrative_id: str) -> Path:
        return self.root / "vertices" / f"{narrative_id}.labeled.json"

    def graph_path(self, narrative_id: str) -> Path:
        return self.root / "graphs" / f"{narrative_id}.graph.json"

    def dot_path(self, narrative_id: str) -> Path:
        return self.root / "graphs" / f"{narrative_id}.dot"

    def trace_path(self, narrative_id: str) -> Path:
        return self.root / "traces" / f"{narrative_id}.trace.json"

    def cassette_path(self, narrative_id: str) -> Path:
        return self.root / "cassettes" / f"{narrative_id}.jsonl"

    def manifest_path(self, narrative_id: str) -> Path:
        return self.root / "reports" / f"{narrative_id}.manifest.json"

    def report_path(self, name: str) -> Path:
        return self.root / "reports" / name

    def models_dir(self) -> Path:
        return self.root / "models"

    def embedding_cache_path(self) -> Path:
        return self.root / "models" / "embeddings.npz"

    # fingerprint gating
    @staticmethod
    def _fp_path(artifact: Path) -> Path:
        return artifact.with_name(artifact.name + ".fp")

    def is_fresh(self, artifact: Path, fingerprint: str) -> bool:
        fp_file = self._fp_path(artifact)
        if not artifact.exists() or not fp_file.exists():
            return False
        return fp_file.read_text(encoding="utf-8").strip() == fingerprint

    def write_artifact(self, artifact: Path, content: str, fingerprint: str) -> None:
        artifact.parent.mkdir(parents=True, exist_ok=True)
        artifact.write_text(content, encoding="utf-8")
        self._fp_path(artifact).write_text(fingerprint + "\n", encoding="utf-8")

    @contextmanager
    def lock(self):
        """One pipeline run per workspace: an O_EXCL lock file."""
        self.root.mkdir(parents=True, exist_ok=True)
        lock_path = self.root / ".lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WorkspaceLockedError(
                f"workspace {self.root} is locked by another run ({lock_path})"
            ) from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield self
        finally:
            lock_path.unlink(missing_ok=True)

    # model artifacts
    def save_models(self, bundle: dict, fingerprint: str) -> None:
        models_dir = self.models_dir()
        models_dir.mkdir(parents=True, exist_ok=True)
        with open(models_dir / "models.pkl", "wb") as fh:
            pickle.dump(bundle, fh)
        meta = {"fingerprint": fingerprint}
        (models_dir / "models.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def load_models(self, expected_fingerprint: str | None = None) -> dict:
        models_dir = self.models_dir()
        pkl = models_dir / "models.pkl"
        meta_path = models_dir / "models.json"
        if not pkl.exists() or not meta_path.exists():
            raise ConfigurationError(
                f"no trained models in {models_dir}; run the train stage first"
            )
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if expected_fingerprint is not None and meta.get("fingerprint") != expected_fingerprint:
            raise ConfigurationError(
                "trained models are stale for this config/dataset; retrain"
            )
        with open(pkl, "rb") as fh:
            return pickle.load(fh)

    def models_fingerprint(self) -> str | None:
        meta_path = self.models_dir() / "models.json"
        if not meta_path.exists():
            return None
        return json.loads(meta_path.read_text(encoding="utf-8")).get("fingerprint")
