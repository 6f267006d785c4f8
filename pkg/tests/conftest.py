"""Shared test fixtures: stub providers, graph factories, and dataset
helpers."""

from __future__ import annotations

import hashlib

import pytest

from ncg.gateway import Cassette, GatewayMode, GenerationParams, LLMGateway
from ncg.model import (
    CausalEdge,
    CausalGraph,
    GraphMetadata,
    STACLabel,
    Vertex,
)


class StubProvider:
    """Deterministic provider: response is a pure function of the prompt.

    Counts calls so tests can assert how often the network side was hit.
    """

    def __init__(self, responder=None):
        self.responder = responder or (
            lambda system, prompt, params: "stub:" + hashlib.sha256(prompt.encode()).hexdigest()[:16]
        )
        self.calls = 0

    def complete(self, system_preamble, prompt, params):
        self.calls += 1
        return self.responder(system_preamble, prompt, params)


class FailingProvider:
    """Provider that must never be reached (replay-isolation guard)."""

    def __init__(self):
        self.calls = 0

    def complete(self, system_preamble, prompt, params):
        self.calls += 1
        raise AssertionError("provider was consulted during replay")


class FlakyProvider:
    """Fails with a transport error a fixed number of times, then succeeds."""

    def __init__(self, failures: int, response: str = "recovered"):
        self.failures = failures
        self.response = response
        self.calls = 0

    def complete(self, system_preamble, prompt, params):
        import requests

        self.calls += 1
        if self.calls <= self.failures:
            raise requests.ConnectionError("synthetic transport failure")
        return self.response


@pytest.fixture
def gen_params() -> GenerationParams:
    return GenerationParams(model_name="test-model", temperature=0.0, max_tokens=256, seed=7)


@pytest.fixture
def record_gateway(tmp_path):
    def factory(responder=None, path=None):
        provider = StubProvider(responder)
        cassette = Cassette(path or tmp_path / "cassette.jsonl")
        return LLMGateway(provider=provider, cassette=cassette, mode=GatewayMode.RECORD), provider

    return factory


def make_vertex(i: int, stac: STACLabel | None = None, text: str | None = None) -> Vertex:
    return Vertex(
        id=f"v{i:03d}",
        text=text or f"The character number {i} acted decisively.",
        stac=stac,
    )


def make_graph(n: int = 3, edges=(), narrative_id: str = "test") -> CausalGraph:
    labels = [STACLabel.SITUATION, STACLabel.ACTION, STACLabel.CONSEQUENCE, STACLabel.TASK]
    vertices = tuple(make_vertex(i + 1, stac=labels[i % 4]) for i in range(n))
    by_id = {v.id: v for v in vertices}
    edge_objs = tuple(
        CausalEdge(
            from_id=a, to_id=b, bond=(by_id[a].stac, by_id[b].stac), origin_iteration=2
        )
        for a, b in edges
    )
    return CausalGraph(
        vertices=vertices,
        edges=edge_objs,
        metadata=GraphMetadata(narrative_id=narrative_id, generated_at="2024-01-01T00:00:00Z"),
    )
