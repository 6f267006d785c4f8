"""Annotation aggregation, chance-corrected agreement, and confusion-matrix
classification metrics.

Conventions: metrics with an empty denominator are reported as None (and
rendered as an em-dash), never as zero; macro averages are unweighted means
over the classes present in the gold sequence.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence

from .errors import ContractError, DegenerateAgreementError

UNDEFINED_MARK = "—"

ANNOTATION_COLUMNS = ("item_id", "annotator_id", "label")


@dataclass(frozen=True)
class AnnotationRecord:
    item_id: str
    annotator_id: str
    label: str


def load_annotations(path) -> list[AnnotationRecord]:
    """Read (item_id, annotator_id, label) rows from a tab-delimited file;
    an annotator may label each item at most once."""
    records: list[AnnotationRecord] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ANNOTATION_COLUMNS:
            raise ContractError(
                f"annotation file must have header {list(ANNOTATION_COLUMNS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ContractError(f"row {lineno}: expected 3 columns, got {len(row)}")
            record = AnnotationRecord(*(cell.strip() for cell in row))
            key = (record.item_id, record.annotator_id)
            if key in seen:
                raise ContractError(
                    f"row {lineno}: duplicate annotation for item {record.item_id!r} "
                    f"by {record.annotator_id!r}"
                )
            seen.add(key)
            records.append(record)
    return records


def aligned_labels(
    records: Sequence[AnnotationRecord], annotator_a: str, annotator_b: str
) -> tuple[list[str], list[str]]:
    """Label sequences for two annotators over their shared items, in a
    fixed item order."""
    by_annotator: dict[str, dict[str, str]] = {}
    for record in records:
        by_annotator.setdefault(record.annotator_id, {})[record.item_id] = record.label
    for name in (annotator_a, annotator_b):
        if name not in by_annotator:
            raise ContractError(f"annotator {name!r} not present in the annotations")
    shared = sorted(set(by_annotator[annotator_a]) & set(by_annotator[annotator_b]))
    if not shared:
        raise ContractError(
            f"annotators {annotator_a!r} and {annotator_b!r} share no items"
        )
    return (
        [by_annotator[annotator_a][item] for item in shared],
        [by_annotator[annotator_b][item] for item in shared],
    )


@dataclass(frozen=True)
class ModeResult:
    label: Hashable
    tied: bool


def aggregate_mode(
    labels: Sequence[Hashable], label_order: Optional[Sequence[Hashable]] = None
) -> ModeResult:
    """Most frequent label; ties break toward the earliest label in
    `label_order` (sorted order when none is given) and are flagged."""
    if not labels:
        raise ContractError("aggregate_mode requires at least one annotation")
    counts = Counter(labels)
    top = max(counts.values())
    candidates = [lab for lab, c in counts.items() if c == top]
    tied = len(candidates) > 1
    if not tied:
        return ModeResult(label=candidates[0], tied=False)
    if label_order is not None:
        order = {lab: i for i, lab in enumerate(label_order)}
        unknown = [lab for lab in candidates if lab not in order]
        if unknown:
            raise ContractError(f"labels {unknown} missing from tie-break order")
        winner = min(candidates, key=lambda lab: order[lab])
    else:
        winner = min(candidates, key=lambda lab: str(lab))
    return ModeResult(label=winner, tied=True)


def cohens_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> float:
    """Chance-corrected agreement between two equal-length label sequences.

    Expected agreement comes from the product of the two marginal
    distributions; when it is exactly 1 (both annotators constant on the
    same label) kappa is undefined and a DegenerateAgreementError is
    raised rather than returning a silent 0.
    """
    if len(labels_a) != len(labels_b):
        raise ContractError(
            f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    n = len(labels_a)
    if n == 0:
        raise ContractError("cohens_kappa requires at least one item")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b)
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    labels = set(count_a) | set(count_b)
    # Integer arithmetic so the degenerate check is exact.
    expected_num = sum(count_a.get(lab, 0) * count_b.get(lab, 0) for lab in labels)
    if expected_num == n * n:
        raise DegenerateAgreementError(
            "expected agreement is 1 (both annotators constant); kappa undefined"
        )
    p_o = observed / n
    p_e = expected_num / (n * n)
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class ClassMetrics:
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    support: int

    def rendered(self, metric: str) -> str:
        value = getattr(self, metric)
        return UNDEFINED_MARK if value is None else f"{value:.2f}"


@dataclass(frozen=True)
class ClassificationReport:
    classes: tuple
    per_class: Mapping[Hashable, ClassMetrics]
    macro_precision: Optional[float]
    macro_recall: Optional[float]
    macro_f1: Optional[float]


def _safe_div(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


def per_class_metrics(
    gold: Sequence[Hashable], predicted: Sequence[Hashable], classes: Sequence[Hashable]
) -> dict[Hashable, ClassMetrics]:
    out: dict[Hashable, ClassMetrics] = {}
    for cls in classes:
        tp = sum(1 for g, p in zip(gold, predicted) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gold, predicted) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gold, predicted) if g == cls and p != cls)
        out[cls] = ClassMetrics(
            precision=_safe_div(tp, tp + fp),
            recall=_safe_div(tp, tp + fn),
            f1=_safe_div(2 * tp, 2 * tp + fp + fn),
            support=tp + fn,
        )
    return out


def classification_metrics(
    gold: Sequence[Hashable],
    predicted: Sequence[Hashable],
    classes: Optional[Sequence[Hashable]] = None,
) -> ClassificationReport:
    """Per-class precision/recall/F1 plus macro averages.

    Macro averages run over classes present in gold; a class that is never
    predicted contributes no precision term (undefined values are skipped,
    not treated as zero).
    """
    if len(gold) != len(predicted):
        raise ContractError(
            f"gold and predicted differ in length: {len(gold)} vs {len(predicted)}"
        )
    if classes is None:
        seen = list(dict.fromkeys(list(gold) + list(predicted)))
        classes = sorted(seen, key=str)
    per_class = per_class_metrics(gold, predicted, classes)
    gold_present = [cls for cls in classes if per_class[cls].support > 0]

    def macro(metric: str) -> Optional[float]:
        values = [getattr(per_class[c], metric) for c in gold_present]
        values = [v for v in values if v is not None]
        return sum(values) / len(values) if values else None

    return ClassificationReport(
        classes=tuple(classes),
        per_class=per_class,
        macro_precision=macro("precision"),
        macro_recall=macro("recall"),
        macro_f1=macro("f1"),
    )
