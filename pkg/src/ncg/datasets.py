"""Dataset loading and synthetic data generators.

The on-disk dataset format is tab-delimited text with a header row:
text, the seven trait columns in canonical order, and an optional stac
column. Embeddings are attached separately (mock encoder, sidecar, or
cache) so label files stay small and diffable.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .embedding import (
    EMBED_DIM,
    Embedder,
    EmbeddingCache,
    MockEmbedder,
    SentenceEmbedding,
    embed_texts,
    embedding_fingerprint,
)
from .errors import ContractError
from .expert_index import (
    DEFAULT_TRAIT_SCHEMA,
    LabeledSentence,
    TraitSchema,
    enumerate_combinations,
)
from .model import (
    Boundedness,
    Eventivity,
    ExpertIndex,
    Impact,
    Initiativity,
    STACLabel,
    TimeEnd,
    TimeStart,
    TRAIT_NAMES,
)

DATASET_COLUMNS = ("text",) + TRAIT_NAMES + ("stac",)


@dataclass(frozen=True)
class DatasetRow:
    text: str
    expert_index: ExpertIndex
    stac: Optional[STACLabel] = None


def load_dataset_tsv(path) -> list[DatasetRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        return _parse_dataset(fh)


def _parse_dataset(fh) -> list[DatasetRow]:
    reader = csv.reader(fh, delimiter="\t")
    header = next(reader, None)
    if header is None or tuple(header) != DATASET_COLUMNS:
        raise ContractError(
            f"dataset header must be {list(DATASET_COLUMNS)}, got {header}"
        )
    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record or not any(cell.strip() for cell in record):
            continue
        if len(record) != len(DATASET_COLUMNS):
            raise ContractError(f"row {lineno}: expected {len(DATASET_COLUMNS)} columns")
        text = record[0].strip()
        traits = {name: record[1 + i].strip() for i, name in enumerate(TRAIT_NAMES)}
        try:
            ei = ExpertIndex.from_dict(traits)
        except ValueError as exc:
            raise ContractError(f"row {lineno}: {exc}") from exc
        stac_raw = record[-1].strip()
        stac = STACLabel.from_string(stac_raw) if stac_raw else None
        rows.append(DatasetRow(text=text, expert_index=ei, stac=stac))
    return rows


def save_dataset_tsv(rows: Sequence[DatasetRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(DATASET_COLUMNS)
        for row in rows:
            traits = row.expert_index.as_dict()
            writer.writerow(
                [row.text]
                + [traits[name] for name in TRAIT_NAMES]
                + [row.stac.value if row.stac else ""]
            )


def fixture_rows() -> list[DatasetRow]:
    """The small hand-labeled sentence set bundled with the package."""
    ref = resources.files("ncg.data").joinpath("fixture_sentences.tsv")
    with ref.open(encoding="utf-8", newline="") as fh:
        return _parse_dataset(fh)


def attach_embeddings(
    rows: Sequence[DatasetRow],
    embedder: Embedder | None = None,
    cache: EmbeddingCache | None = None,
) -> list[LabeledSentence]:
    embedder = embedder or MockEmbedder()
    embeddings = embed_texts([r.text for r in rows], embedder, cache)
    return [
        LabeledSentence(
            text=r.text, embedding=e, expert_index=r.expert_index, stac=r.stac
        )
        for r, e in zip(rows, embeddings)
    ]


def stac_from_expert_index(ei: ExpertIndex) -> STACLabel:
    """Deterministic trait-to-label rule behind the EI-governed synthetic
    family: the label is a pure function of the expert index, so the
    one-hot block is a sufficient statistic."""
    if ei.eventivity is Eventivity.DYNAMIC and ei.initiativity is Initiativity.INITIATE:
        return STACLabel.ACTION
    if ei.impact is Impact.IMPACTFUL and ei.time_start is TimeStart.PAST:
        return STACLabel.CONSEQUENCE
    if ei.time_end is TimeEnd.FUTURE and ei.boundedness is not Boundedness.STATIC:
        return STACLabel.TASK
    return STACLabel.SITUATION


def ei_governed_dataset(
    n: int,
    seed: int,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
    embedder: Embedder | None = None,
) -> list[LabeledSentence]:
    """Synthetic STAC dataset where the label is a function of the expert
    index and the embeddings are pure hash noise (independent of labels
    by construction)."""
    combos = enumerate_combinations(schema)
    rng = np.random.Generator(np.random.PCG64(seed))
    embedder = embedder or MockEmbedder()
    rows = []
    for i in range(n):
        ei = combos[int(rng.integers(0, len(combos)))]
        text = f"synthetic event {seed}-{i:05d}"
        rows.append(
            LabeledSentence(
                text=text,
                embedding=embedder.encode([text])[0],
                expert_index=ei,
                stac=stac_from_expert_index(ei),
            )
        )
    return rows


@dataclass(frozen=True)
class SeparableData:
    """Cluster-per-combination embeddings with a wide margin, for tests
    that need a trivially learnable trait signal."""

    rows: tuple[LabeledSentence, ...]
    combos: tuple[ExpertIndex, ...]
    centroids: tuple[np.ndarray, ...]


def separable_ei_dataset(
    n: int,
    seed: int,
    n_clusters: int = 8,
    separation: float = 8.0,
    noise: float = 0.5,
    schema: TraitSchema = DEFAULT_TRAIT_SCHEMA,
) -> SeparableData:
    """Embeddings clustered around one centroid per expert-index combo.

    Centroids are axis-aligned (cluster k sits at `separation` along
    coordinate k) so the margin survives per-coordinate splits; the chosen
    combos are guaranteed to vary every trait, so each of the seven heads
    sees at least two classes.
    """
    all_combos = enumerate_combinations(schema)
    rng = np.random.Generator(np.random.PCG64(seed))
    combos: list[ExpertIndex] = []
    # Rejection-sample combo sets until every trait carries >= 2 categories.
    for _ in range(1000):
        picks = rng.choice(len(all_combos), size=n_clusters, replace=False)
        candidate = [all_combos[int(i)] for i in picks]
        if all(
            len({c.trait(t) for c in candidate}) >= 2 for t in TRAIT_NAMES
        ):
            combos = candidate
            break
    if not combos:
        raise ContractError(
            f"could not cover every trait with {n_clusters} clusters; increase n_clusters"
        )
    centroids = []
    for k in range(len(combos)):
        centroid = np.zeros(EMBED_DIM)
        centroid[k % EMBED_DIM] = separation
        centroids.append(centroid)
    rows = []
    for i in range(n):
        k = i % n_clusters
        vec = centroids[k] + rng.standard_normal(EMBED_DIM) * noise
        text = f"separable {seed}-{i:05d}"
        rows.append(
            LabeledSentence(
                text=text,
                embedding=SentenceEmbedding(
                    vector=vec,
                    source_fingerprint=embedding_fingerprint(text, "synthetic-cluster"),
                ),
                expert_index=combos[k],
                stac=stac_from_expert_index(combos[k]),
            )
        )
    return SeparableData(rows=tuple(rows), combos=tuple(combos), centroids=tuple(centroids))


def shuffled_label_copy(
    rows: Sequence[LabeledSentence], trait: str, seed: int
) -> list[LabeledSentence]:
    """Permute one trait's labels across rows (chance-level control)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    values = [r.expert_index.trait(trait) for r in rows]
    perm = rng.permutation(len(rows))
    out = []
    for row, j in zip(rows, perm):
        traits = row.expert_index.as_dict()
        traits[trait] = values[int(j)].value
        out.append(
            LabeledSentence(
                text=row.text,
                embedding=row.embedding,
                expert_index=ExpertIndex.from_dict(traits),
                stac=row.stac,
            )
        )
    return out


def content_hash(rows: Sequence[DatasetRow | LabeledSentence]) -> str:
    digest = hashlib.sha256()
    for row in rows:
        stac = row.stac.value if row.stac else ""
        digest.update(
            f"{row.text}\x1f{stac}\x1f{','.join(row.expert_index.as_dict().values())}\x1e".encode()
        )
    return digest.hexdigest()
