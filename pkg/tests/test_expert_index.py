"""Expert-index machinery: enumeration, one-hot encoding, trait heads on
synthetic embeddings, and the evaluation report."""

import numpy as np
import pytest

from ncg.datasets import (
    attach_embeddings,
    fixture_rows,
    separable_ei_dataset,
    shuffled_label_copy,
)
from ncg.embedding import SentenceEmbedding
from ncg.errors import ConfigurationError, ContractError, DegenerateDataError
from ncg.expert_index import (
    DEFAULT_TRAIT_SCHEMA,
    THREE_WAY_EVENTIVITY_SCHEMA,
    encode_one_hot,
    enumerate_combinations,
    evaluate_feature_models,
    holdout_split,
    predict_expert_index,
    train_all_traits,
    train_feature_classifier,
)
from ncg.learners import TreeParams, split_indices
from ncg.model import (
    Boundedness,
    Eventivity,
    ExpertIndex,
    Genericity,
    Impact,
    Initiativity,
    TimeEnd,
    TimeStart,
    TRAIT_NAMES,
)

FAST_TREES = TreeParams(n_trees=60, max_depth=4, early_stopping=False)


def first_combo() -> ExpertIndex:
    return ExpertIndex(
        genericity=Genericity.SPECIFIC,
        eventivity=Eventivity.DYNAMIC,
        boundedness=Boundedness.EPISODIC,
        initiativity=Initiativity.INITIATE,
        time_start=TimeStart.PAST,
        time_end=TimeEnd.CURRENT,
        impact=Impact.IMPACTFUL,
    )


class TestEnumeration:
    def test_exactly_192_combinations(self):
        assert len(enumerate_combinations()) == 192

    def test_no_duplicates(self):
        combos = enumerate_combinations()
        assert len(set(combos)) == 192

    def test_contains_all_first_category_record(self):
        assert first_combo() in enumerate_combinations()

    def test_three_way_eventivity_yields_288(self):
        combos = enumerate_combinations(THREE_WAY_EVENTIVITY_SCHEMA)
        assert len(combos) == 288
        assert len(set(combos)) == 288

    def test_schema_widths(self):
        assert DEFAULT_TRAIT_SCHEMA.one_hot_width == 15
        assert THREE_WAY_EVENTIVITY_SCHEMA.one_hot_width == 16


class TestOneHot:
    def test_documented_example(self):
        ei = ExpertIndex(
            genericity=Genericity.SPECIFIC,
            eventivity=Eventivity.DYNAMIC,
            boundedness=Boundedness.EPISODIC,
            initiativity=Initiativity.INITIATE,
            time_start=TimeStart.PAST,
            time_end=TimeEnd.CURRENT,
            impact=Impact.RESOLVED,
        )
        expected = [1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 1]
        assert encode_one_hot(ei).tolist() == expected

    def test_every_vector_sums_to_seven(self):
        for combo in enumerate_combinations():
            assert encode_one_hot(combo).sum() == 7

    def test_block_sums_are_one(self):
        blocks = [2, 2, 3, 2, 2, 2, 2]
        for combo in enumerate_combinations():
            vec = encode_one_hot(combo)
            offset = 0
            for width in blocks:
                assert vec[offset : offset + width].sum() == 1
                offset += width

    def test_injective_over_all_combinations(self):
        vectors = {tuple(encode_one_hot(c)) for c in enumerate_combinations()}
        assert len(vectors) == 192

    def test_width_15(self):
        assert encode_one_hot(first_combo()).shape == (15,)

    def test_out_of_schema_category_rejected(self):
        ei = ExpertIndex(
            genericity=Genericity.SPECIFIC,
            eventivity=Eventivity.MENTALLY_ACTIVE,
            boundedness=Boundedness.EPISODIC,
            initiativity=Initiativity.INITIATE,
            time_start=TimeStart.PAST,
            time_end=TimeEnd.CURRENT,
            impact=Impact.RESOLVED,
        )
        with pytest.raises(ContractError, match="eventivity"):
            encode_one_hot(ei)
        assert encode_one_hot(ei, THREE_WAY_EVENTIVITY_SCHEMA).shape == (16,)


class TestSplit:
    def test_80_20_split_of_1000_gives_200_test(self):
        train_idx, test_idx = split_indices(1000, seed=0)
        assert len(test_idx) == 200
        assert len(train_idx) == 800

    def test_splits_disjoint_and_cover(self):
        train_idx, test_idx = split_indices(137, seed=3)
        assert set(train_idx) & set(test_idx) == set()
        assert set(train_idx) | set(test_idx) == set(range(137))

    def test_deterministic_given_seed(self):
        assert split_indices(50, seed=9)[1].tolist() == split_indices(50, seed=9)[1].tolist()


class TestTraitTraining:
    def test_separable_set_high_accuracy(self):
        data = separable_ei_dataset(n=160, seed=0).rows
        model = train_feature_classifier(
            data, "boundedness", split_seed=0, tree_params=FAST_TREES
        )
        train, test = holdout_split(data, split_seed=0)
        gold = [row.expert_index.boundedness for row in test]
        pred = model.predict_many([row.embedding for row in test])
        accuracy = np.mean([g == p for g, p in zip(gold, pred)])
        assert accuracy >= 0.95
        # and the model interpolates its own training rows exactly
        train_pred = model.predict_many([row.embedding for row in train])
        assert all(
            p == row.expert_index.boundedness for p, row in zip(train_pred, train)
        )

    def test_shuffled_labels_drop_to_majority_rate(self):
        data = separable_ei_dataset(n=160, seed=1).rows
        shuffled = shuffled_label_copy(data, "genericity", seed=5)
        model = train_feature_classifier(
            shuffled, "genericity", split_seed=1, tree_params=FAST_TREES
        )
        _, test = holdout_split(shuffled, split_seed=1)
        gold = [row.expert_index.genericity for row in test]
        pred = model.predict_many([row.embedding for row in test])
        accuracy = np.mean([g == p for g, p in zip(gold, pred)])
        labels = [row.expert_index.genericity for row in shuffled]
        majority = max(labels.count(v) for v in set(labels)) / len(labels)
        assert accuracy <= majority + 0.17

    def test_single_class_data_rejected(self):
        rows = attach_embeddings(fixture_rows()[:5])
        constant = [
            type(row)(
                text=row.text,
                embedding=row.embedding,
                expert_index=rows[0].expert_index,
                stac=row.stac,
            )
            for row in rows
        ]
        with pytest.raises(DegenerateDataError):
            train_feature_classifier(constant, "genericity", split_seed=0)

    def test_training_is_deterministic(self):
        data = separable_ei_dataset(n=120, seed=2).rows
        embeddings = [row.embedding for row in data[:20]]
        m1 = train_feature_classifier(data, "impact", split_seed=4, tree_params=FAST_TREES)
        m2 = train_feature_classifier(data, "impact", split_seed=4, tree_params=FAST_TREES)
        assert m1.predict_many(embeddings) == m2.predict_many(embeddings)


class TestPredictExpertIndex:
    def test_centroid_predicts_its_cluster_labels(self):
        bundle = separable_ei_dataset(n=240, seed=3, n_clusters=8)
        models = train_all_traits(bundle.rows, split_seed=0, tree_params=FAST_TREES)
        for combo, centroid in zip(bundle.combos[:4], bundle.centroids[:4]):
            embedding = SentenceEmbedding(
                vector=centroid, source_fingerprint="centroid"
            )
            assert predict_expert_index(models, embedding) == combo

    def test_identical_embeddings_identical_predictions(self):
        data = separable_ei_dataset(n=120, seed=4).rows
        models = train_all_traits(data, split_seed=0, tree_params=FAST_TREES)
        embedding = data[0].embedding
        assert predict_expert_index(models, embedding) == predict_expert_index(models, embedding)

    def test_missing_trait_model_names_the_trait(self):
        data = separable_ei_dataset(n=120, seed=5).rows
        models = train_all_traits(data, split_seed=0, tree_params=FAST_TREES)
        del models["impact"]
        with pytest.raises(ConfigurationError, match="impact"):
            predict_expert_index(models, data[0].embedding)


class _NearestCentroidHead:
    """Oracle head: one-hot probabilities from the true cluster centroid."""

    def __init__(self, centroids, class_indices, n_classes):
        self.centroids = np.stack(centroids)
        self.class_indices = class_indices
        self.n_classes = n_classes

    def predict_proba(self, X):
        out = np.zeros((len(X), self.n_classes))
        for i, row in enumerate(np.asarray(X)):
            k = int(np.argmin(((self.centroids - row) ** 2).sum(axis=1)))
            out[i, self.class_indices[k]] = 1.0
        return out


def _oracle_models(bundle):
    from ncg.expert_index import FeatureModel

    models = {}
    for trait in TRAIT_NAMES:
        classes = DEFAULT_TRAIT_SCHEMA.categories_for(trait)
        class_indices = [classes.index(c.trait(trait)) for c in bundle.combos]
        models[trait] = FeatureModel(
            trait=trait,
            classifier=_NearestCentroidHead(bundle.centroids, class_indices, len(classes)),
            classes=classes,
        )
    return models


class TestEvaluateFeatureModels:
    def test_perfect_predictions_give_unit_f1(self):
        bundle = separable_ei_dataset(n=240, seed=6)
        models = _oracle_models(bundle)
        _, test = holdout_split(list(bundle.rows), split_seed=0)
        report = evaluate_feature_models(models, test)
        for row in report.rows:
            if row.metrics.support > 0:
                assert row.metrics.f1 == pytest.approx(1.0)

    def test_absent_class_rendered_as_dash(self):
        bundle = separable_ei_dataset(n=240, seed=6)
        models = _oracle_models(bundle)
        _, test = holdout_split(list(bundle.rows), split_seed=0)
        report = evaluate_feature_models(models, test)
        categories_in_test = {
            (t, row.expert_index.trait(t)) for row in test for t in TRAIT_NAMES
        }
        missing = [
            row for row in report.rows if (row.trait, row.category) not in categories_in_test
        ]
        if missing:  # eventivity has 2 classes but clusters may only use some
            assert all(r.metrics.f1 is None for r in missing)
            rendered = report.render()
            assert "—" in rendered

    def test_report_layout(self):
        bundle = separable_ei_dataset(n=120, seed=7)
        models = _oracle_models(bundle)
        _, test = holdout_split(list(bundle.rows), split_seed=0)
        report = evaluate_feature_models(models, test)
        text = report.render()
        assert f"n={len(test)}" in text
        assert "Precision" in text and "Recall" in text and "F1" in text
        assert "genericity (Specific)" in text

    def test_empty_testset_rejected(self):
        bundle = separable_ei_dataset(n=120, seed=8)
        models = _oracle_models(bundle)
        with pytest.raises(ContractError):
            evaluate_feature_models(models, [])
