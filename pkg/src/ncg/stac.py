"""STAC classification: feature assembly over embeddings and the one-hot
expert index, six model variants, the zero-shot prompt route, and the
ablation harness that compares them on identical splits.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ContractError, DegenerateDataError, ParseError
from .expert_index import (
    DEFAULT_TRAIT_SCHEMA,
    LabeledSentence,
    TraitSchema,
    encode_one_hot,
)
from .gateway import GenerationParams, LLMGateway
from .learners import (
    DEFAULT_TREE_PARAMS,
    LinearSoftmaxHead,
    TreeEnsembleHead,
    TreeParams,
    split_indices,
)
from .metrics import classification_metrics
from .model import ExpertIndex, STACLabel, STAC_LABELS
from .prompts import PromptSpec

logger = logging.getLogger(__name__)


class FeatureLayout(Enum):
    EMBEDDING_ONLY = "embedding-only"
    EI_ONLY = "ei-only"
    COMBINED = "combined"

    def width(self, schema: TraitSchema = DEFAULT_TRAIT_SCHEMA, embed_dim: int = 768) -> int:
        if self is FeatureLayout.EMBEDDING_ONLY:
            return embed_dim
        if self is FeatureLayout.EI_ONLY:
            return schema.one_hot_width
        return embed_dim + schema.one_hot_width


@dataclass(frozen=True)
class StacFeatureVector:
    values: np.ndarray
    layout: FeatureLayout

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


def build_feature_vector(
    embedding,
    ei: Optional[ExpertIndex],
    layout: FeatureLayout,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
) -> StacFeatureVector:
    """Assemble features for one sentence: embedding values first, then the
    one-hot expert-index block, in that fixed order."""
    if layout is not FeatureLayout.EMBEDDING_ONLY and ei is None:
        raise ContractError(f"layout {layout.value} requires an expert index")
    if layout is FeatureLayout.EMBEDDING_ONLY:
        return StacFeatureVector(values=np.asarray(embedding.vector), layout=layout)
    one_hot = encode_one_hot(ei, schema)
    if layout is FeatureLayout.EI_ONLY:
        return StacFeatureVector(values=one_hot, layout=layout)
    return StacFeatureVector(
        values=np.concatenate([np.asarray(embedding.vector), one_hot]), layout=layout
    )


class StacVariant(Enum):
    LINEAR_EMBED = "linear-embed"
    LINEAR_COMBINED = "linear-combined"
    TREE_EI_ONLY = "tree-ei-only"
    TREE_EMBED = "tree-embed"
    TREE_COMBINED = "tree-combined"
    PROMPT_BASED = "prompt-based"

    @property
    def layout(self) -> Optional[FeatureLayout]:
        return {
            StacVariant.LINEAR_EMBED: FeatureLayout.EMBEDDING_ONLY,
            StacVariant.LINEAR_COMBINED: FeatureLayout.COMBINED,
            StacVariant.TREE_EI_ONLY: FeatureLayout.EI_ONLY,
            StacVariant.TREE_EMBED: FeatureLayout.EMBEDDING_ONLY,
            StacVariant.TREE_COMBINED: FeatureLayout.COMBINED,
            StacVariant.PROMPT_BASED: None,
        }[self]

    @property
    def is_linear(self) -> bool:
        return self in (StacVariant.LINEAR_EMBED, StacVariant.LINEAR_COMBINED)


TRAINED_VARIANTS = tuple(v for v in StacVariant if v is not StacVariant.PROMPT_BASED)


@dataclass(frozen=True)
class StacModel:
    """A trained STAC classifier (or a gateway binding for the prompt route).

    The feature layout is sealed into the model: predictions are only
    accepted for vectors with the matching layout. The prompt-based
    variant carries no trained parameters, only its gateway binding, and
    classifies sentences rather than feature vectors.
    """

    variant: StacVariant
    head: Optional[object] = None
    classes: tuple[STACLabel, ...] = STAC_LABELS
    split_seed: int = 0
    gateway: Optional[LLMGateway] = None
    gen_params: Optional[GenerationParams] = None

    @classmethod
    def prompt_based(cls, gateway: LLMGateway, gen_params: GenerationParams) -> "StacModel":
        return cls(variant=StacVariant.PROMPT_BASED, gateway=gateway, gen_params=gen_params)

    def classify_sentence(self, sentence: str) -> STACLabel:
        if self.variant is not StacVariant.PROMPT_BASED:
            raise ContractError("trained variants classify feature vectors; use predict_stac")
        return classify_stac_via_llm(sentence, self.gateway, self.gen_params)


def train_stac(
    data: Sequence[LabeledSentence],
    variant: StacVariant,
    split_seed: int,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
    test_fraction: float = 0.2,
    tree_params: TreeParams = DEFAULT_TREE_PARAMS,
) -> StacModel:
    """Fit one variant on the train side of the deterministic 80/20 split."""
    if variant is StacVariant.PROMPT_BASED:
        raise ContractError("the prompt-based variant is not trained; bind a gateway instead")
    labels = [row.stac for row in data]
    if any(lab is None for lab in labels):
        raise ContractError("every training row needs a STAC label")
    missing = [lab for lab in STAC_LABELS if lab not in labels]
    if missing:
        raise DegenerateDataError(
            f"training data lacks label(s): {', '.join(l.value for l in missing)}"
        )
    train_idx, _ = split_indices(len(data), split_seed, test_fraction)
    X = np.stack(
        [
            build_feature_vector(
                data[i].embedding, data[i].expert_index, variant.layout, schema
            ).values
            for i in train_idx
        ]
    )
    y = np.array([STAC_LABELS.index(labels[i]) for i in train_idx])
    if variant.is_linear:
        head = LinearSoftmaxHead(seed=split_seed)
    else:
        head = TreeEnsembleHead(params=tree_params, seed=split_seed)
    head.fit(X, y, n_classes=len(STAC_LABELS))
    return StacModel(variant=variant, head=head, split_seed=split_seed)


def predict_stac(model: StacModel, features: StacFeatureVector) -> STACLabel:
    """Label for one feature vector; probability ties resolve in S,T,A,C order."""
    if model.variant is StacVariant.PROMPT_BASED:
        raise ContractError("prompt-based models classify sentences, not feature vectors")
    if features.layout is not model.variant.layout:
        raise ContractError(
            f"model {model.variant.value} expects layout "
            f"{model.variant.layout.value}, got {features.layout.value}"
        )
    proba = model.head.predict_proba(features.values.reshape(1, -1))[0]
    return model.classes[int(np.argmax(proba))]


def predict_stac_many(model: StacModel, features: Sequence[StacFeatureVector]) -> list[STACLabel]:
    if not features:
        return []
    for f in features:
        if f.layout is not model.variant.layout:
            raise ContractError("feature layout does not match the model variant")
    X = np.stack([f.values for f in features])
    proba = model.head.predict_proba(X)
    return [model.classes[int(i)] for i in np.argmax(proba, axis=1)]


_LABEL_WORDS = {
    "situation": STACLabel.SITUATION,
    "task": STACLabel.TASK,
    "action": STACLabel.ACTION,
    "consequence": STACLabel.CONSEQUENCE,
}


def _scan_labels(text: str) -> list[STACLabel]:
    found = []
    for word in re.findall(r"[a-z]+", text.lower()):
        if word in _LABEL_WORDS:
            found.append(_LABEL_WORDS[word])
    return found


def classify_stac_via_llm(
    sentence: str, gateway: LLMGateway, params: GenerationParams
) -> STACLabel:
    """Zero-shot classification through the gateway.

    The response is parsed by case-insensitive keyword scan: the first line
    must name exactly one label, falling back to the whole text; anything
    ambiguous or label-free is a parse error, never a default.
    """
    response = gateway.complete(
        PromptSpec(template_id="stac_zero_shot", variables={"sentence": sentence}),
        params,
    )
    first_line = response.strip().splitlines()[0] if response.strip() else ""
    for region in (first_line, response):
        labels = _scan_labels(region)
        if len(set(labels)) == 1:
            return labels[0]
    raise ParseError(
        f"no unambiguous STAC label in response for sentence {sentence!r}",
        raw_text=response,
    )


@dataclass(frozen=True)
class AblationRow:
    variant: StacVariant
    seed: int
    f1_per_label: Mapping[STACLabel, Optional[float]]
    macro_f1: Optional[float]


@dataclass(frozen=True)
class AblationReport:
    """Per-variant, per-label F1 over one or more seeds, all variants
    sharing identical splits within a seed."""

    rows: tuple[AblationRow, ...]
    dataset_fingerprint: str
    seeds: tuple[int, ...]
    n_rows: int = 0

    def rows_for(self, variant: StacVariant) -> list[AblationRow]:
        return [r for r in self.rows if r.variant is variant]

    def mean_macro_f1(self, variant: StacVariant) -> float:
        values = [r.macro_f1 for r in self.rows_for(variant) if r.macro_f1 is not None]
        if not values:
            raise ContractError(f"no rows for variant {variant.value}")
        return sum(values) / len(values)

    def render(self) -> str:
        header = f"{'variant':<18}" + "".join(f"{lab.letter:>8}" for lab in STAC_LABELS) + f"{'macro':>8}"
        lines = [header]
        for variant in StacVariant:
            rows = self.rows_for(variant)
            if not rows:
                continue
            cells = []
            for lab in STAC_LABELS:
                vals = [r.f1_per_label[lab] for r in rows if r.f1_per_label[lab] is not None]
                cells.append(f"{sum(vals) / len(vals):>8.3f}" if vals else f"{'—':>8}")
            macro = self.mean_macro_f1(variant)
            lines.append(f"{variant.value:<18}" + "".join(cells) + f"{macro:>8.3f}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "dataset_fingerprint": self.dataset_fingerprint,
            "seeds": list(self.seeds),
            "n_rows": self.n_rows,
            "rows": [
                {
                    "variant": r.variant.value,
                    "seed": r.seed,
                    "f1": {lab.value: r.f1_per_label[lab] for lab in STAC_LABELS},
                    "macro_f1": r.macro_f1,
                }
                for r in self.rows
            ],
        }

    def to_delimited(self) -> str:
        lines = ["variant\tseed\tS\tT\tA\tC\tmacro"]
        for r in self.rows:
            cells = [
                "" if r.f1_per_label[lab] is None else f"{r.f1_per_label[lab]:.6f}"
                for lab in STAC_LABELS
            ]
            macro = "" if r.macro_f1 is None else f"{r.macro_f1:.6f}"
            lines.append(f"{r.variant.value}\t{r.seed}\t" + "\t".join(cells) + f"\t{macro}")
        return "\n".join(lines) + "\n"


def dataset_fingerprint(data: Sequence[LabeledSentence]) -> str:
    digest = hashlib.sha256()
    for row in data:
        stac = row.stac.value if row.stac else ""
        digest.update(f"{row.text}\x1f{stac}\x1f".encode("utf-8"))
        digest.update(",".join(row.expert_index.as_dict().values()).encode("utf-8"))
        digest.update(b"\x1e")
    return digest.hexdigest()


def ablation_run(
    data: Sequence[LabeledSentence],
    seeds: Sequence[int] | int,
    variants: Sequence[StacVariant] = TRAINED_VARIANTS,
    gateway: Optional[LLMGateway] = None,
    gen_params: Optional[GenerationParams] = None,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
    test_fraction: float = 0.2,
    tree_params: TreeParams = DEFAULT_TREE_PARAMS,
) -> AblationReport:
    """Train and evaluate every requested variant on identical splits.

    The prompt-based variant may only be requested with a gateway bound
    (live, record, or cassette replay).
    """
    if isinstance(seeds, int):
        seeds = [seeds]
    if StacVariant.PROMPT_BASED in variants and (gateway is None or gen_params is None):
        raise ContractError("prompt-based variant requires a gateway and generation params")
    rows: list[AblationRow] = []
    for seed in seeds:
        _, test_idx = split_indices(len(data), seed, test_fraction)
        test_rows = [data[i] for i in test_idx]
        gold = [row.stac for row in test_rows]
        for variant in variants:
            if variant is StacVariant.PROMPT_BASED:
                pred = [
                    classify_stac_via_llm(row.text, gateway, gen_params)
                    for row in test_rows
                ]
            else:
                model = train_stac(
                    data, variant, seed,
                    schema=schema, test_fraction=test_fraction, tree_params=tree_params,
                )
                feats = [
                    build_feature_vector(r.embedding, r.expert_index, variant.layout, schema)
                    for r in test_rows
                ]
                pred = predict_stac_many(model, feats)
            report = classification_metrics(gold, pred, classes=STAC_LABELS)
            rows.append(
                AblationRow(
                    variant=variant,
                    seed=seed,
                    f1_per_label={lab: report.per_class[lab].f1 for lab in STAC_LABELS},
                    macro_f1=report.macro_f1,
                )
            )
            logger.info(
                "ablation seed=%d variant=%s macro-F1=%s",
                seed, variant.value,
                "n/a" if rows[-1].macro_f1 is None else f"{rows[-1].macro_f1:.3f}",
            )
    return AblationReport(
        rows=tuple(rows),
        dataset_fingerprint=dataset_fingerprint(data),
        seeds=tuple(seeds),
        n_rows=len(data),
    )
