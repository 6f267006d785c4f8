"""
Agreement statistics and win-rate tables
========================================

The evaluation harness aggregates multi-annotator labels by mode,
measures chance-corrected agreement with Cohen's kappa, and summarizes
pairwise graph judgments as per-dimension win rates.
"""

import random

from ncg.judge import DimensionVerdict, JUDGING_DIMENSIONS, Winner, win_rate_table
from ncg.metrics import aggregate_mode, classification_metrics, cohens_kappa

# Mode aggregation with a documented tie-break order.
print("mode of {A, A, B}:", aggregate_mode(["A", "A", "B"]).label)
tied = aggregate_mode(["A", "B"], label_order=["A", "B"])
print(f"mode of {{A, B}}: {tied.label} (tied={tied.tied})")

# Kappa on a hand-checkable confusion matrix [[20, 5], [10, 15]]:
# observed agreement 0.7, expected 0.5, so kappa = 0.4.
alice = ["x"] * 25 + ["y"] * 25
bob = ["x"] * 20 + ["y"] * 5 + ["x"] * 10 + ["y"] * 15
print(f"\nkappa: {cohens_kappa(alice, bob):.3f}")

# Per-class precision/recall/F1 plus macro averages.
report = classification_metrics(alice, bob, classes=["x", "y"])
for cls in ("x", "y"):
    m = report.per_class[cls]
    print(f"class {cls}: P={m.precision:.2f} R={m.recall:.2f} F1={m.f1:.2f}")
print(f"macro-F1: {report.macro_f1:.3f}")

# Win rates over simulated pairwise verdicts for 50 narratives.
rng = random.Random(0)
verdicts = [
    DimensionVerdict(
        narrative_id=f"n{i}",
        dimension=dim,
        winner=Winner.A if rng.random() < 0.8 else Winner.B,
    )
    for i in range(50)
    for dim in JUDGING_DIMENSIONS
]
print()
print(win_rate_table(verdicts).render())
