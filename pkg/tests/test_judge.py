"""Pairwise judging, win rates, and rubric scoring."""

import random

import pytest

from ncg.errors import (
    ContractError,
    DegeneratePairError,
    ParseError,
    PartialJudgeError,
)
from ncg.gateway import Cassette, GatewayMode, GenerationParams, LLMGateway
from ncg.judge import (
    DimensionVerdict,
    JUDGING_DIMENSIONS,
    Winner,
    judge_pair,
    rubric_score_summary,
    win_rate_table,
)
from ncg.model import CausalGraph

from conftest import StubProvider, make_graph


def _gateway(tmp_path, responder):
    return LLMGateway(
        provider=StubProvider(responder),
        cassette=Cassette(tmp_path / "judge.jsonl"),
        mode=GatewayMode.RECORD,
    )


def _all_graph(n: str) -> str:
    return "\n".join(f"{i + 1}: Graph {n}" for i in range(len(JUDGING_DIMENSIONS)))


def _pair():
    a = make_graph(3, edges=[("v001", "v002")], narrative_id="alpha")
    b = make_graph(3, edges=[("v001", "v002"), ("v002", "v003")], narrative_id="beta")
    return a, b


class TestJudgePair:
    def test_explicit_verdicts_parse(self, tmp_path, gen_params):
        a, b = _pair()
        gateway = _gateway(tmp_path, lambda s, p, g: _all_graph("1"))
        verdicts = judge_pair("story", a, b, gateway, gen_params, narrative_id="n1", seed=0)
        assert len(verdicts) == len(JUDGING_DIMENSIONS)
        assert [v.dimension for v in verdicts] == list(JUDGING_DIMENSIONS)

    def test_derandomization_maps_back_to_documents(self, tmp_path, gen_params):
        # The judge always prefers the document whose id is "alpha",
        # wherever it is presented; after de-randomization every verdict
        # must name system A.
        a, b = _pair()

        def prefers_alpha(system, prompt, params):
            return _all_graph("1" if prompt.find('"alpha"') < prompt.find('"beta"') else "2")

        for seed in range(8):
            gateway = _gateway(tmp_path, prefers_alpha)
            verdicts = judge_pair(
                "story", a, b, gateway, gen_params, narrative_id=f"n{seed}", seed=seed
            )
            assert all(v.winner is Winner.A for v in verdicts)

    def test_presentation_order_actually_varies(self, tmp_path, gen_params):
        swaps = set()
        for seed in range(12):
            rng = random.Random(f"{seed}:x")
            swaps.add(rng.random() < 0.5)
        assert swaps == {True, False}

    def test_identical_documents_refused(self, tmp_path, gen_params):
        a, _ = _pair()
        twin = CausalGraph(vertices=a.vertices, edges=a.edges, metadata=a.metadata)
        gateway = _gateway(tmp_path, lambda s, p, g: _all_graph("1"))
        with pytest.raises(DegeneratePairError):
            judge_pair("story", a, twin, gateway, gen_params, narrative_id="n", seed=0)

    def test_missing_dimension_is_partial_error(self, tmp_path, gen_params):
        a, b = _pair()

        def drops_last(system, prompt, params):
            return "\n".join(f"{i + 1}: Graph 1" for i in range(len(JUDGING_DIMENSIONS) - 1))

        gateway = _gateway(tmp_path, drops_last)
        with pytest.raises(PartialJudgeError) as err:
            judge_pair("story", a, b, gateway, gen_params, narrative_id="n", seed=0)
        assert err.value.missing == ["Ease of Reading"]

    def test_unknown_dimension_rejected_at_construction(self):
        with pytest.raises(ContractError):
            DimensionVerdict(narrative_id="n", dimension="Vibes", winner=Winner.A)


class TestWinRateTable:
    def _verdicts(self, wins_per_dim: dict[str, int], n: int):
        out = []
        for dim in JUDGING_DIMENSIONS:
            wins = wins_per_dim.get(dim, 0)
            for i in range(n):
                out.append(
                    DimensionVerdict(
                        narrative_id=f"n{i}",
                        dimension=dim,
                        winner=Winner.A if i < wins else Winner.B,
                    )
                )
        return out

    def test_all_wins_is_100(self):
        verdicts = self._verdicts({d: 10 for d in JUDGING_DIMENSIONS}, 10)
        table = win_rate_table(verdicts)
        assert all(rate == 100.0 for rate in table.rates.values())
        assert table.n_narratives == 10

    def test_52_of_100(self):
        verdicts = self._verdicts({JUDGING_DIMENSIONS[-1]: 52}, 100)
        table = win_rate_table(verdicts)
        assert table.rates["Ease of Reading"] == pytest.approx(52.0)

    def test_matches_hand_count_on_random_verdicts(self):
        rng = random.Random(1)
        verdicts = []
        for i in range(40):
            for dim in JUDGING_DIMENSIONS:
                verdicts.append(
                    DimensionVerdict(
                        narrative_id=f"n{i}",
                        dimension=dim,
                        winner=rng.choice([Winner.A, Winner.B]),
                    )
                )
        table = win_rate_table(verdicts)
        for dim in JUDGING_DIMENSIONS:
            wins = sum(
                1 for v in verdicts if v.dimension == dim and v.winner is Winner.A
            )
            assert table.rates[dim] == pytest.approx(100.0 * wins / 40)

    def test_a_and_b_rates_sum_to_100(self):
        rng = random.Random(2)
        verdicts = []
        for i in range(30):
            for dim in JUDGING_DIMENSIONS:
                verdicts.append(
                    DimensionVerdict(
                        narrative_id=f"n{i}", dimension=dim,
                        winner=rng.choice([Winner.A, Winner.B]),
                    )
                )
        flipped = [
            DimensionVerdict(
                narrative_id=v.narrative_id, dimension=v.dimension,
                winner=Winner.B if v.winner is Winner.A else Winner.A,
            )
            for v in verdicts
        ]
        table = win_rate_table(verdicts)
        table_flipped = win_rate_table(flipped)
        for dim in JUDGING_DIMENSIONS:
            assert table.rates[dim] + table_flipped.rates[dim] == pytest.approx(100.0)

    def test_empty_verdicts_rejected(self):
        with pytest.raises(ContractError):
            win_rate_table([])

    def test_render_layout(self):
        verdicts = self._verdicts({d: 5 for d in JUDGING_DIMENSIONS}, 10)
        text = win_rate_table(verdicts).render()
        assert "Ease of Reading" in text
        assert "50%" in text


class TestRubricScoring:
    def test_straight_fives(self, tmp_path, gen_params):
        gateway = _gateway(tmp_path, lambda s, p, g: "scores: 5, 5, 5")
        assert rubric_score_summary("A fine summary.", gateway, gen_params) == (5.0, 5.0, 5.0)

    def test_mean_across_judges(self, tmp_path):
        def by_model(system, prompt, params):
            return "scores: 4, 4, 4" if params.model_name == "judge-a" else "scores: 5, 5, 5"

        gateway = _gateway(tmp_path, by_model)
        judges = [
            GenerationParams(model_name="judge-a"),
            GenerationParams(model_name="judge-b"),
        ]
        assert rubric_score_summary("Summary.", gateway, judges) == (4.5, 4.5, 4.5)

    def test_half_points_accepted(self, tmp_path, gen_params):
        gateway = _gateway(tmp_path, lambda s, p, g: "scores: 4.5, 3.0, 2.5")
        assert rubric_score_summary("Summary.", gateway, gen_params) == (4.5, 3.0, 2.5)

    def test_score_out_of_range_rejected(self, tmp_path, gen_params):
        gateway = _gateway(tmp_path, lambda s, p, g: "scores: 6, 4, 4")
        with pytest.raises(ParseError, match="outside"):
            rubric_score_summary("Summary.", gateway, gen_params)

    def test_non_half_point_rejected(self, tmp_path, gen_params):
        gateway = _gateway(tmp_path, lambda s, p, g: "scores: 4.3, 4, 4")
        with pytest.raises(ParseError, match="half point"):
            rubric_score_summary("Summary.", gateway, gen_params)

    def test_unparseable_response_rejected(self, tmp_path, gen_params):
        gateway = _gateway(tmp_path, lambda s, p, g: "a lovely summary indeed")
        with pytest.raises(ParseError):
            rubric_score_summary("Summary.", gateway, gen_params)

    def test_empty_summary_rejected(self, tmp_path, gen_params):
        gateway = _gateway(tmp_path, lambda s, p, g: "scores: 5,5,5")
        with pytest.raises(ContractError):
            rubric_score_summary("   ", gateway, gen_params)
