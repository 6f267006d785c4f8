"""Expert-index machinery: trait schemas, exhaustive enumeration, one-hot
encoding, per-trait classifier heads over frozen sentence embeddings, the
per-trait/per-class evaluation report, and the prompt-based labeling
baseline.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .embedding import SentenceEmbedding
from .errors import ConfigurationError, ContractError, DegenerateDataError, ParseError
from .learners import DEFAULT_TREE_PARAMS, TreeEnsembleHead, TreeParams, split_indices
from .metrics import ClassMetrics, per_class_metrics
from .model import (
    Boundedness,
    Eventivity,
    ExpertIndex,
    Genericity,
    Impact,
    Initiativity,
    STACLabel,
    TimeEnd,
    TimeStart,
    TRAIT_NAMES,
)


@dataclass(frozen=True)
class TraitSchema:
    """Active categories per trait, in canonical block order."""

    categories: Mapping[str, tuple[enum.Enum, ...]]

    def __post_init__(self):
        if tuple(self.categories.keys()) != TRAIT_NAMES:
            raise ValueError("trait schema must cover all traits in canonical order")

    def categories_for(self, trait: str) -> tuple[enum.Enum, ...]:
        return self.categories[trait]

    @property
    def one_hot_width(self) -> int:
        return sum(len(v) for v in self.categories.values())

    @property
    def combination_count(self) -> int:
        count = 1
        for v in self.categories.values():
            count *= len(v)
        return count


def _schema(eventivity: tuple[Eventivity, ...]) -> TraitSchema:
    return TraitSchema(
        categories={
            "genericity": (Genericity.SPECIFIC, Genericity.GENERIC),
            "eventivity": eventivity,
            "boundedness": (Boundedness.EPISODIC, Boundedness.HABITUAL, Boundedness.STATIC),
            "initiativity": (Initiativity.INITIATE, Initiativity.RECEIVE),
            "time_start": (TimeStart.PAST, TimeStart.CURRENT),
            "time_end": (TimeEnd.CURRENT, TimeEnd.FUTURE),
            "impact": (Impact.IMPACTFUL, Impact.RESOLVED),
        }
    )


# 2*2*3*2*2*2*2 = 192 combinations, one-hot width 15.
DEFAULT_TRAIT_SCHEMA = _schema((Eventivity.DYNAMIC, Eventivity.STATIVE))

# Alternative three-way eventivity split: 288 combinations, width 16.
THREE_WAY_EVENTIVITY_SCHEMA = _schema(
    (Eventivity.DYNAMIC, Eventivity.STATIVE, Eventivity.MENTALLY_ACTIVE)
)


def enumerate_combinations(schema: TraitSchema = DEFAULT_TRAIT_SCHEMA) -> list[ExpertIndex]:
    """Full Cartesian product of the trait categories, in canonical order."""
    blocks = [schema.categories_for(name) for name in TRAIT_NAMES]
    return [
        ExpertIndex(**dict(zip(TRAIT_NAMES, combo)))
        for combo in itertools.product(*blocks)
    ]


def encode_one_hot(ei: ExpertIndex, schema: TraitSchema = DEFAULT_TRAIT_SCHEMA) -> np.ndarray:
    """Block-wise one-hot encoding: one bit set per trait block."""
    parts = []
    for name in TRAIT_NAMES:
        categories = schema.categories_for(name)
        value = ei.trait(name)
        if value not in categories:
            raise ContractError(
                f"trait {name!r} value {value.value!r} not in the active schema"
            )
        block = np.zeros(len(categories))
        block[categories.index(value)] = 1.0
        parts.append(block)
    return np.concatenate(parts)


@dataclass(frozen=True)
class LabeledSentence:
    """One dataset row: text, its frozen embedding, and gold labels."""

    text: str
    embedding: SentenceEmbedding
    expert_index: ExpertIndex
    stac: Optional[STACLabel] = None


@dataclass(frozen=True)
class FeatureModel:
    """A trained classifier head for one trait."""

    trait: str
    classifier: TreeEnsembleHead
    classes: tuple[enum.Enum, ...]
    split_seed: int = 0

    def predict(self, embedding: SentenceEmbedding) -> enum.Enum:
        proba = self.classifier.predict_proba(embedding.vector.reshape(1, -1))[0]
        return self.classes[int(np.argmax(proba))]

    def predict_many(self, embeddings: Sequence[SentenceEmbedding]) -> list[enum.Enum]:
        if not embeddings:
            return []
        X = np.stack([e.vector for e in embeddings])
        proba = self.classifier.predict_proba(X)
        return [self.classes[int(i)] for i in np.argmax(proba, axis=1)]


def _trait_seed(split_seed: int, trait: str) -> int:
    return (split_seed * 1000003 + TRAIT_NAMES.index(trait)) % (2**31)


def train_feature_classifier(
    data: Sequence[LabeledSentence],
    trait: str,
    split_seed: int,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
    test_fraction: float = 0.2,
    tree_params: TreeParams = DEFAULT_TREE_PARAMS,
) -> FeatureModel:
    """Fit one trait head on the train side of a deterministic 80/20 split.

    The same (split_seed, test_fraction) pair passed to `holdout_split`
    recovers the untouched test rows.
    """
    if trait not in TRAIT_NAMES:
        raise ConfigurationError(f"unknown trait: {trait!r}")
    classes = schema.categories_for(trait)
    labels = [row.expert_index.trait(trait) for row in data]
    if len(set(labels)) < 2:
        raise DegenerateDataError(
            f"trait {trait!r} has a single class in the training data"
        )
    train_idx, _ = split_indices(len(data), split_seed, test_fraction)
    X = np.stack([data[i].embedding.vector for i in train_idx])
    y = np.array([classes.index(labels[i]) for i in train_idx])
    head = TreeEnsembleHead(params=tree_params, seed=_trait_seed(split_seed, trait))
    head.fit(X, y, n_classes=len(classes))
    return FeatureModel(trait=trait, classifier=head, classes=classes, split_seed=split_seed)


def holdout_split(
    data: Sequence[LabeledSentence], split_seed: int, test_fraction: float = 0.2
) -> tuple[list[LabeledSentence], list[LabeledSentence]]:
    train_idx, test_idx = split_indices(len(data), split_seed, test_fraction)
    return [data[i] for i in train_idx], [data[i] for i in test_idx]


def train_all_traits(
    data: Sequence[LabeledSentence],
    split_seed: int,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
    test_fraction: float = 0.2,
    tree_params: TreeParams = DEFAULT_TREE_PARAMS,
) -> dict[str, FeatureModel]:
    return {
        trait: train_feature_classifier(
            data, trait, split_seed, schema=schema,
            test_fraction=test_fraction, tree_params=tree_params,
        )
        for trait in TRAIT_NAMES
    }


def predict_expert_index(
    models: Mapping[str, FeatureModel], embedding: SentenceEmbedding
) -> ExpertIndex:
    """One category per trait from the seven trained heads."""
    missing = [t for t in TRAIT_NAMES if t not in models]
    if missing:
        raise ConfigurationError(f"missing trait model(s): {', '.join(missing)}")
    values = {trait: models[trait].predict(embedding) for trait in TRAIT_NAMES}
    return ExpertIndex(**values)


@dataclass(frozen=True)
class TraitEvalRow:
    trait: str
    category: enum.Enum
    metrics: ClassMetrics


@dataclass(frozen=True)
class FeatureEvalReport:
    rows: tuple[TraitEvalRow, ...] = field(default_factory=tuple)
    n_test: int = 0

    def render(self) -> str:
        lines = [
            f"Classification results (test set, n={self.n_test})",
            f"{'Label':<34}{'Precision':>10}{'Recall':>10}{'F1':>10}",
        ]
        last_trait = None
        for row in self.rows:
            if last_trait is not None and row.trait != last_trait:
                lines.append("-" * 64)
            last_trait = row.trait
            name = f"{row.trait} ({row.category.value})"
            lines.append(
                f"{name:<34}"
                f"{row.metrics.rendered('precision'):>10}"
                f"{row.metrics.rendered('recall'):>10}"
                f"{row.metrics.rendered('f1'):>10}"
            )
        return "\n".join(lines)


# Prompt-based trait labeling (baseline route; the trained heads are the
# production path). Template ids follow the catalog naming.
_TRAIT_TEMPLATES = {
    "genericity": "trait_specificity",
    "eventivity": "trait_eventivity",
    "boundedness": "trait_boundedness",
    "initiativity": "trait_initiative",
    "time_start": "trait_time_start",
    "time_end": "trait_time_end",
    "impact": "trait_impact",
}

# Keyword and single-letter answer forms per trait, scanned first line
# first, then the whole response.
_TRAIT_KEYWORDS: dict[str, list[tuple[str, enum.Enum]]] = {
    "genericity": [("specific", Genericity.SPECIFIC), ("generic", Genericity.GENERIC)],
    "eventivity": [
        ("mentally active", Eventivity.MENTALLY_ACTIVE),
        ("mental", Eventivity.MENTALLY_ACTIVE),
        ("dynamically active", Eventivity.DYNAMIC),
        ("dynamic", Eventivity.DYNAMIC),
        ("stative", Eventivity.STATIVE),
    ],
    "boundedness": [
        ("episodic", Boundedness.EPISODIC),
        ("habitual", Boundedness.HABITUAL),
        ("static", Boundedness.STATIC),
    ],
    "initiativity": [
        ("initiates", Initiativity.INITIATE),
        ("initiate", Initiativity.INITIATE),
        ("receives", Initiativity.RECEIVE),
        ("receive", Initiativity.RECEIVE),
    ],
    "time_start": [
        ("past", TimeStart.PAST),
        ("current", TimeStart.CURRENT),
        ("present", TimeStart.CURRENT),
        ("now", TimeStart.CURRENT),
    ],
    "time_end": [
        ("future", TimeEnd.FUTURE),
        ("current", TimeEnd.CURRENT),
        ("present", TimeEnd.CURRENT),
    ],
    "impact": [("impactful", Impact.IMPACTFUL), ("resolved", Impact.RESOLVED)],
}

_TRAIT_LETTERS: dict[str, dict[str, enum.Enum]] = {
    "time_start": {"p": TimeStart.PAST, "c": TimeStart.CURRENT},
    "time_end": {"f": TimeEnd.FUTURE, "c": TimeEnd.CURRENT},
}


def _scan_trait(trait: str, region: str) -> set[enum.Enum]:
    lowered = region.lower()
    found: set[enum.Enum] = set()
    consumed = lowered
    for keyword, category in _TRAIT_KEYWORDS[trait]:
        if re.search(rf"\b{re.escape(keyword)}\b", consumed):
            found.add(category)
            consumed = consumed.replace(keyword, " ")
    bare = lowered.strip().strip(".:)(\"'")
    letters = _TRAIT_LETTERS.get(trait, {})
    if bare in letters:
        found.add(letters[bare])
    return found


def classify_trait_via_llm(
    sentence: str,
    trait: str,
    gateway,
    params,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
) -> enum.Enum:
    """One trait category via the prompt route.

    The first line must commit to exactly one category (whole response as
    a fallback); an uncommitted answer is a parse error. Under the default
    two-way eventivity schema a "Mentally Active" answer folds into
    Stative, which is where the trait table files mental verbs.
    """
    from .prompts import PromptSpec

    if trait not in TRAIT_NAMES:
        raise ConfigurationError(f"unknown trait: {trait!r}")
    response = gateway.complete(
        PromptSpec(template_id=_TRAIT_TEMPLATES[trait], variables={"sentence": sentence}),
        params,
    )
    first_line = response.strip().splitlines()[0] if response.strip() else ""
    for region in (first_line, response):
        found = _scan_trait(trait, region)
        if len(found) == 1:
            category = found.pop()
            if category not in schema.categories_for(trait):
                if category is Eventivity.MENTALLY_ACTIVE:
                    return Eventivity.STATIVE
                raise ParseError(
                    f"category {category.value!r} is outside the active schema",
                    raw_text=response,
                )
            return category
    raise ParseError(
        f"no unambiguous {trait} category in response for {sentence!r}",
        raw_text=response,
    )


def label_expert_index_via_llm(
    sentence: str, gateway, params, schema: TraitSchema = DEFAULT_TRAIT_SCHEMA
) -> ExpertIndex:
    """Full seven-trait record via the prompt route (one call per trait)."""
    values = {
        trait: classify_trait_via_llm(sentence, trait, gateway, params, schema)
        for trait in TRAIT_NAMES
    }
    return ExpertIndex(**values)


def evaluate_feature_models(
    models: Mapping[str, FeatureModel], testset: Sequence[LabeledSentence]
) -> FeatureEvalReport:
    """Per-trait, per-class precision/recall/F1 on a held-out set.

    A class absent from the test gold shows undefined metrics (rendered
    as an em-dash), never zeros.
    """
    if not testset:
        raise ContractError("testset must be nonempty")
    rows: list[TraitEvalRow] = []
    embeddings = [ls.embedding for ls in testset]
    for trait in TRAIT_NAMES:
        if trait not in models:
            raise ConfigurationError(f"missing trait model: {trait}")
        model = models[trait]
        gold = [ls.expert_index.trait(trait) for ls in testset]
        pred = model.predict_many(embeddings)
        table = per_class_metrics(gold, pred, model.classes)
        for category in model.classes:
            rows.append(TraitEvalRow(trait=trait, category=category, metrics=table[category]))
    return FeatureEvalReport(rows=tuple(rows), n_test=len(testset))
