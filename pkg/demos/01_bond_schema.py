"""
The STAC bond schema
====================

Every event in a narrative graph carries one of four labels: Situation,
Task, Action, or Consequence. A directed causal edge is only legal when
its (source, target) label pair appears in the bond allowlist. The
default schema admits 13 of the 16 ordered pairs.
"""

from ncg.model import DEFAULT_BOND_SCHEMA, STAC_LABELS, bond_allowed
from ncg.builder import bond_table_text

# The full table, as it is shown to the model during conditioning.
print(bond_table_text(DEFAULT_BOND_SCHEMA))
print()

# The three excluded pairs: a Task never bonds back to a Situation or to
# another Task, and an Action never bonds back to a Situation.
excluded = [
    (a, b)
    for a in STAC_LABELS
    for b in STAC_LABELS
    if not bond_allowed(DEFAULT_BOND_SCHEMA, a, b)
]
print("excluded pairs:")
for a, b in excluded:
    print(f"  {a.value} -> {b.value}")

assert len(DEFAULT_BOND_SCHEMA.allowed) == 13
assert len(excluded) == 3
