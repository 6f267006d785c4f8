"""Narrative causal graphs: extract event vertices from a story, classify
them with a seven-trait expert index and a four-way STAC label, and
assemble a bond-constrained causal graph through an iterative prompting
protocol, with a full evaluation harness alongside.
"""

__version__ = "0.1.0"

from .model import (
    BondSchema,
    CausalEdge,
    CausalGraph,
    DEFAULT_BOND_SCHEMA,
    ExpertIndex,
    STACLabel,
    Vertex,
    bond_allowed,
)
from .graphdoc import deserialize_graph, serialize_graph

__all__ = [
    "BondSchema",
    "CausalEdge",
    "CausalGraph",
    "DEFAULT_BOND_SCHEMA",
    "ExpertIndex",
    "STACLabel",
    "Vertex",
    "bond_allowed",
    "deserialize_graph",
    "serialize_graph",
    "__version__",
]
