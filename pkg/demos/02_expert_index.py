"""
The seven-trait expert index
============================

Each sentence gets one category per linguistic trait: genericity,
eventivity, boundedness, initiativity, time start, time end, and impact.
With two categories everywhere except the three-way boundedness, the
space holds 2*2*3*2*2*2*2 = 192 distinct records, and the block-wise
one-hot encoding is a 15-wide binary vector with exactly one bit set per
trait.
"""

from ncg.expert_index import (
    DEFAULT_TRAIT_SCHEMA,
    THREE_WAY_EVENTIVITY_SCHEMA,
    encode_one_hot,
    enumerate_combinations,
)

combos = enumerate_combinations()
print(f"combinations: {len(combos)}")
print(f"one-hot width: {DEFAULT_TRAIT_SCHEMA.one_hot_width}")

first = combos[0]
print("\nfirst record:")
for trait, value in first.as_dict().items():
    print(f"  {trait:<14}{value}")
print(f"one-hot: {encode_one_hot(first).astype(int).tolist()}")

# Every encoding is distinct and sums to 7 (one bit per trait block).
vectors = {tuple(encode_one_hot(c)) for c in combos}
assert len(vectors) == 192
assert all(sum(v) == 7 for v in vectors)

# An alternative schema splits eventivity three ways, growing the space
# to 288 records and the encoding to 16 bits.
print(f"\nthree-way eventivity: {THREE_WAY_EVENTIVITY_SCHEMA.combination_count} records, "
      f"width {THREE_WAY_EVENTIVITY_SCHEMA.one_hot_width}")
