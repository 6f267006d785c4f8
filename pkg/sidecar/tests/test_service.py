"""Service contract tests: shapes, ordering, determinism, error codes,
and the acceptance-level semantic-ordering check."""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ncg_embed_sidecar.app import create_app
from ncg_embed_sidecar.encoder import EMBED_DIM, HashedNgramEncoder


@pytest.fixture(scope="module")
def client():
    app = create_app(encoder=HashedNgramEncoder())
    with TestClient(app) as client:
        yield client


def _vectors(client, texts):
    resp = client.post("/embed", json={"texts": texts})
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestHealth:
    def test_503_before_load(self):
        app = create_app(encoder=None)
        bare = TestClient(app)  # no lifespan: encoder not loaded yet
        resp = bare.get("/health")
        assert resp.status_code == 503

    def test_ok_after_load(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["status"] == "ok"
        assert doc["dim"] == EMBED_DIM
        assert doc["encoder_id"]


class TestEmbedContract:
    def test_single_text_shape(self, client):
        doc = _vectors(client, ["a"])
        assert len(doc["vectors"]) == 1
        assert len(doc["vectors"][0]) == EMBED_DIM
        assert doc["dim"] == EMBED_DIM
        assert all(np.isfinite(doc["vectors"][0]))

    def test_same_text_twice_in_one_batch(self, client):
        doc = _vectors(client, ["The cat sleeps.", "The cat sleeps."])
        assert doc["vectors"][0] == doc["vectors"][1]

    def test_positional_ordering(self, client):
        a, b = "The cat sleeps.", "Stock prices fell."
        batch = _vectors(client, [a, b, a])["vectors"]
        assert batch[0] == batch[2]
        solo_a = _vectors(client, [a])["vectors"][0]
        solo_b = _vectors(client, [b])["vectors"][0]
        assert batch[0] == solo_a
        assert batch[1] == solo_b

    def test_bitwise_determinism_across_calls(self, client):
        first = _vectors(client, ["The fox jumped over the gate."])["vectors"][0]
        second = _vectors(client, ["The fox jumped over the gate."])["vectors"][0]
        assert first == second

    def test_vectors_are_finite_and_normalized(self, client):
        vecs = np.array(_vectors(client, ["alpha", "beta", "gamma"])["vectors"])
        assert np.all(np.isfinite(vecs))
        norms = np.linalg.norm(vecs, axis=1)
        assert np.allclose(norms, 1.0)


class TestErrors:
    def test_empty_batch_is_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_empty_text_is_400(self, client):
        assert client.post("/embed", json={"texts": ["ok", "  "]}).status_code == 400

    def test_oversized_text_is_400(self, client):
        assert client.post("/embed", json={"texts": ["x" * 8193]}).status_code == 400

    def test_oversized_batch_is_413(self, client):
        assert client.post("/embed", json={"texts": ["x"] * 257}).status_code == 413

    def test_malformed_body_is_400(self, client):
        assert client.post("/embed", json={"sentences": ["x"]}).status_code == 400
        assert client.post("/embed", json={"texts": "not-a-list"}).status_code == 400

    def test_embed_before_load_is_503(self):
        app = create_app(encoder=None)
        bare = TestClient(app)
        assert bare.post("/embed", json={"texts": ["x"]}).status_code == 503


def _cosine(u, v):
    u, v = np.asarray(u), np.asarray(v)
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


class TestAcceptance:
    """[SECONDARY] sidecar contract: shape, ordering, determinism, and the
    semantic-ordering sanity check, all within a minute after load."""

    def test_acceptance_criterion(self, client):
        start = time.perf_counter()

        doc = _vectors(client, ["a"])
        assert len(doc["vectors"][0]) == EMBED_DIM

        batch = _vectors(client, ["one", "two", "one"])["vectors"]
        assert batch[0] == batch[2] and batch[0] != batch[1]

        v1 = _vectors(client, ["determinism probe"])["vectors"][0]
        v2 = _vectors(client, ["determinism probe"])["vectors"][0]
        assert v1 == v2

        anchor, paraphrase, unrelated = (
            "The cat sleeps.",
            "A cat is sleeping.",
            "Stock prices fell.",
        )
        vecs = _vectors(client, [anchor, paraphrase, unrelated])["vectors"]
        close = _cosine(vecs[0], vecs[1])
        far = _cosine(vecs[0], vecs[2])
        elapsed = time.perf_counter() - start
        status = "PASS" if close > far and elapsed < 60 else "FAIL"
        print(
            f"[ACCEPTANCE] sidecar contract: {status} "
            f"(paraphrase sim {close:.3f} > unrelated sim {far:.3f}; {elapsed:.2f}s)"
        )
        assert close > far
        assert elapsed < 60
