"""Sentence embeddings: deterministic mock encoder, HTTP sidecar client,
and a binary cache keyed by content fingerprint.

The mock encoder expands a seeded hash of the text into 768 pseudo-random
reals; it honors the same shape contract as the sidecar service so every
test and the offline pipeline run without a model server.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import ConfigurationError, GatewayError

EMBED_DIM = 768
ENV_EMBED_URL = "NCG_EMBED_URL"


def embedding_fingerprint(text: str, encoder_id: str) -> str:
    return hashlib.sha256(f"{encoder_id}\x00{text}".encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SentenceEmbedding:
    vector: np.ndarray
    source_fingerprint: str

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.shape != (EMBED_DIM,):
            raise ValueError(f"embedding must have shape ({EMBED_DIM},), got {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ValueError("embedding contains non-finite values")
        object.__setattr__(self, "vector", vec)


class Embedder(Protocol):
    encoder_id: str

    def encode(self, texts: Sequence[str]) -> list[SentenceEmbedding]:
        ...


class MockEmbedder:
    """Deterministic stand-in encoder.

    Each text's sha256 (salted with the encoder id) seeds a PCG64 stream
    that is expanded to a unit-norm 768-vector, so equal texts always get
    bitwise-identical embeddings and distinct texts get independent noise.
    """

    def __init__(self, encoder_id: str = "mock-hash-768"):
        self.encoder_id = encoder_id

    def encode_one(self, text: str) -> SentenceEmbedding:
        digest = hashlib.sha256(f"{self.encoder_id}\x00{text}".encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "big")
        rng = np.random.Generator(np.random.PCG64(seed))
        vec = rng.standard_normal(EMBED_DIM)
        vec /= np.linalg.norm(vec)
        return SentenceEmbedding(
            vector=vec, source_fingerprint=embedding_fingerprint(text, self.encoder_id)
        )

    def encode(self, texts: Sequence[str]) -> list[SentenceEmbedding]:
        return [self.encode_one(t) for t in texts]


class HTTPEmbedder:
    """Client for the embedding sidecar: POST {texts:[...]} to /embed,
    vectors come back in request order."""

    def __init__(self, base_url: str | None = None, timeout: float = 60.0, batch_size: int = 256):
        self.base_url = base_url if base_url is not None else os.environ.get(ENV_EMBED_URL)
        if not self.base_url:
            raise ConfigurationError(f"no embedding endpoint; set {ENV_EMBED_URL}")
        self.timeout = timeout
        self.batch_size = batch_size
        self.encoder_id = "remote"  # replaced by the service's id on first call

    def encode(self, texts: Sequence[str]) -> list[SentenceEmbedding]:
        out: list[SentenceEmbedding] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            try:
                resp = requests.post(
                    self.base_url.rstrip("/") + "/embed",
                    json={"texts": batch},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                raise GatewayError(f"embedding service unreachable: {exc}") from exc
            if resp.status_code != 200:
                raise GatewayError(
                    f"embedding service returned {resp.status_code}: {resp.text[:200]}"
                )
            doc = resp.json()
            vectors = doc.get("vectors")
            encoder_id = doc.get("encoder_id", "remote")
            self.encoder_id = encoder_id
            if not isinstance(vectors, list) or len(vectors) != len(batch):
                raise GatewayError("embedding service broke the positional contract")
            for text, vec in zip(batch, vectors):
                out.append(
                    SentenceEmbedding(
                        vector=np.asarray(vec, dtype=np.float64),
                        source_fingerprint=embedding_fingerprint(text, encoder_id),
                    )
                )
        return out


class EmbeddingCache:
    """Binary sidecar file mapping fingerprints to vectors (.npz)."""

    def __init__(self, path):
        self.path = str(path)
        self._store: dict[str, np.ndarray] = {}
        if os.path.exists(self.path):
            with np.load(self.path) as data:
                self._store = {key: data[key] for key in data.files}

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._store

    def __len__(self) -> int:
        return len(self._store)

    def get(self, fingerprint: str) -> np.ndarray | None:
        return self._store.get(fingerprint)

    def put(self, fingerprint: str, vector: np.ndarray) -> None:
        self._store[fingerprint] = np.asarray(vector, dtype=np.float64)

    def save(self) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
        np.savez_compressed(self.path, **self._store)
        # np.savez appends .npz when missing; keep the declared path authoritative
        if not os.path.exists(self.path) and os.path.exists(self.path + ".npz"):
            os.replace(self.path + ".npz", self.path)


def embed_texts(
    texts: Sequence[str], embedder: Embedder, cache: EmbeddingCache | None = None
) -> list[SentenceEmbedding]:
    """Encode `texts`, serving repeats from the cache when one is given."""
    out: list[SentenceEmbedding | None] = [None] * len(texts)
    missing: list[int] = []
    for i, text in enumerate(texts):
        fp = embedding_fingerprint(text, embedder.encoder_id)
        cached = cache.get(fp) if cache is not None else None
        if cached is not None:
            out[i] = SentenceEmbedding(vector=cached, source_fingerprint=fp)
        else:
            missing.append(i)
    if missing:
        fresh = embedder.encode([texts[i] for i in missing])
        for i, emb in zip(missing, fresh):
            out[i] = emb
            if cache is not None:
                cache.put(emb.source_fingerprint, emb.vector)
    return [e for e in out if e is not None]
