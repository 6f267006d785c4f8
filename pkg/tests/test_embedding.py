"""Embedding layer: mock determinism, the HTTP client contract, and the
binary cache."""

import numpy as np
import pytest

from ncg.embedding import (
    EMBED_DIM,
    EmbeddingCache,
    HTTPEmbedder,
    MockEmbedder,
    SentenceEmbedding,
    embed_texts,
    embedding_fingerprint,
)
from ncg.errors import ConfigurationError, GatewayError


class TestMockEmbedder:
    def test_shape_and_unit_norm(self):
        emb = MockEmbedder().encode_one("The fox ran.")
        assert emb.vector.shape == (EMBED_DIM,)
        assert np.isclose(np.linalg.norm(emb.vector), 1.0)

    def test_bitwise_deterministic(self):
        a = MockEmbedder().encode_one("The fox ran.")
        b = MockEmbedder().encode_one("The fox ran.")
        assert np.array_equal(a.vector, b.vector)

    def test_distinct_texts_distinct_vectors(self):
        embedder = MockEmbedder()
        a, b = embedder.encode(["one sentence", "another sentence"])
        assert not np.array_equal(a.vector, b.vector)

    def test_fingerprint_binds_text_and_encoder(self):
        embedder = MockEmbedder()
        emb = embedder.encode_one("text")
        assert emb.source_fingerprint == embedding_fingerprint("text", embedder.encoder_id)
        assert embedding_fingerprint("text", "other") != emb.source_fingerprint


class TestSentenceEmbedding:
    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="shape"):
            SentenceEmbedding(vector=np.zeros(10), source_fingerprint="fp")

    def test_rejects_non_finite(self):
        bad = np.zeros(EMBED_DIM)
        bad[0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            SentenceEmbedding(vector=bad, source_fingerprint="fp")


class TestHTTPEmbedder:
    def test_requires_endpoint(self, monkeypatch):
        monkeypatch.delenv("NCG_EMBED_URL", raising=False)
        with pytest.raises(ConfigurationError, match="NCG_EMBED_URL"):
            HTTPEmbedder()

    def _fake_post(self, vectors_fn):
        class Resp:
            status_code = 200

            def __init__(self, payload):
                self._payload = payload

            def json(self):
                return self._payload

        def post(url, json=None, timeout=None):
            texts = json["texts"]
            return Resp(
                {"vectors": vectors_fn(texts), "encoder_id": "fake-encoder", "dim": EMBED_DIM}
            )

        return post

    def test_round_trip_and_encoder_id(self, monkeypatch):
        monkeypatch.setattr(
            "ncg.embedding.requests.post",
            self._fake_post(lambda texts: [[float(len(t))] * EMBED_DIM for t in texts]),
        )
        embedder = HTTPEmbedder(base_url="http://embed.invalid")
        out = embedder.encode(["ab", "abcd"])
        assert embedder.encoder_id == "fake-encoder"
        assert out[0].vector[0] == 2.0
        assert out[1].vector[0] == 4.0
        assert out[0].source_fingerprint == embedding_fingerprint("ab", "fake-encoder")

    def test_positional_contract_violation_rejected(self, monkeypatch):
        monkeypatch.setattr(
            "ncg.embedding.requests.post",
            self._fake_post(lambda texts: [[0.0] * EMBED_DIM]),  # wrong count
        )
        embedder = HTTPEmbedder(base_url="http://embed.invalid")
        with pytest.raises(GatewayError, match="positional"):
            embedder.encode(["a", "b"])

    def test_server_error_rejected(self, monkeypatch):
        class Resp:
            status_code = 500
            text = "boom"

        monkeypatch.setattr("ncg.embedding.requests.post", lambda *a, **k: Resp())
        embedder = HTTPEmbedder(base_url="http://embed.invalid")
        with pytest.raises(GatewayError, match="500"):
            embedder.encode(["a"])


class TestEmbeddingCache:
    def test_round_trip_to_disk(self, tmp_path):
        path = tmp_path / "cache.npz"
        cache = EmbeddingCache(path)
        vec = np.arange(EMBED_DIM, dtype=np.float64)
        cache.put("fp1", vec)
        cache.save()
        reloaded = EmbeddingCache(path)
        assert "fp1" in reloaded
        assert np.array_equal(reloaded.get("fp1"), vec)

    def test_embed_texts_serves_repeats_from_cache(self, tmp_path):
        calls = []

        class CountingEmbedder:
            encoder_id = "counting"

            def encode(self, texts):
                calls.extend(texts)
                return [
                    SentenceEmbedding(
                        vector=np.ones(EMBED_DIM),
                        source_fingerprint=embedding_fingerprint(t, self.encoder_id),
                    )
                    for t in texts
                ]

        cache = EmbeddingCache(tmp_path / "c.npz")
        embedder = CountingEmbedder()
        embed_texts(["x", "y"], embedder, cache)
        embed_texts(["x", "y", "z"], embedder, cache)
        assert calls == ["x", "y", "z"]
