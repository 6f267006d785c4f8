"""Sentence encoders behind one contract: encode(texts) -> (n, 768) float
array, deterministic per (text, encoder_id), frozen for the process
lifetime.

Two backends:

* TransformerEncoder wraps a pretrained sentence-transformer checkpoint
  (mean pooling over token vectors, the library default) and requires its
  weights to be available locally or downloadable.
* HashedNgramEncoder is a deterministic fallback with no model weights:
  every word and character trigram is expanded through a seeded hash into
  a 768-dimensional direction, and a sentence is the normalized sum of its
  feature directions. Paraphrases share surface features, so related
  sentences land closer together than unrelated ones, which is exactly the
  ordering contract the service promises.

`load_encoder("auto")` prefers the transformer and falls back to the
hashed encoder when no checkpoint can be loaded (offline environments).
"""

from __future__ import annotations

import hashlib
import logging
import re
from typing import Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

EMBED_DIM = 768
DEFAULT_TRANSFORMER = "sentence-transformers/all-mpnet-base-v2"

_WORD_RE = re.compile(r"[a-z0-9]+")


class Encoder(Protocol):
    encoder_id: str

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        ...


class HashedNgramEncoder:
    """Deterministic bag-of-features encoder (no weights, no network)."""

    def __init__(self):
        self.encoder_id = "hashed-ngram-768-v1"
        self._cache: dict[str, np.ndarray] = {}

    def _feature_vector(self, feature: str) -> np.ndarray:
        cached = self._cache.get(feature)
        if cached is not None:
            return cached
        digest = hashlib.sha256(f"{self.encoder_id}\x00{feature}".encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "big")
        rng = np.random.Generator(np.random.PCG64(seed))
        vec = rng.standard_normal(EMBED_DIM)
        vec /= np.linalg.norm(vec)
        self._cache[feature] = vec
        return vec

    @staticmethod
    def _features(text: str) -> list[str]:
        words = _WORD_RE.findall(text.lower())
        features = [f"w:{w}" for w in words]
        for word in words:
            padded = f"^{word}$"
            features.extend(
                f"c:{padded[i : i + 3]}" for i in range(len(padded) - 2)
            )
        return features or ["w:"]

    def encode_one(self, text: str) -> np.ndarray:
        total = np.zeros(EMBED_DIM)
        for feature in self._features(text):
            total += self._feature_vector(feature)
        norm = np.linalg.norm(total)
        if norm == 0:
            # degenerate but deterministic: hash the raw text instead
            return self._feature_vector(f"t:{text}")
        return total / norm

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.encode_one(t) for t in texts])


class TransformerEncoder:
    """Pretrained sentence-transformer backend (768-dim checkpoints only)."""

    def __init__(self, model_name: str = DEFAULT_TRANSFORMER):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_name)
        dim = self._model.get_sentence_embedding_dimension()
        if dim != EMBED_DIM:
            raise ValueError(
                f"encoder {model_name!r} produces {dim}-dimensional vectors, need {EMBED_DIM}"
            )
        self.encoder_id = f"transformer:{model_name}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(
            list(texts), convert_to_numpy=True, normalize_embeddings=True
        )
        return np.asarray(vectors, dtype=np.float64)


def load_encoder(spec: str = "auto") -> Encoder:
    """Resolve an encoder spec: "hashed", "auto", or a transformer
    checkpoint name."""
    if spec == "hashed":
        return HashedNgramEncoder()
    model_name = DEFAULT_TRANSFORMER if spec == "auto" else spec
    try:
        encoder = TransformerEncoder(model_name)
        logger.info("loaded transformer encoder %s", encoder.encoder_id)
        return encoder
    except Exception as exc:
        if spec != "auto":
            raise
        logger.warning(
            "transformer checkpoint unavailable (%s); falling back to the "
            "deterministic hashed-ngram encoder", exc,
        )
        return HashedNgramEncoder()
