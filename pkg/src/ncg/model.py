"""Core domain types: STAC labels, the seven-trait expert index, graph
vertices and edges, and the bond schema that constrains which label pairs
may be causally linked.

All types are immutable value objects; anything that looks like mutation
returns a new value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .errors import IntegrityError


class STACLabel(enum.Enum):
    """Four-way sentence taxonomy. Sort order is S, T, A, C."""

    SITUATION = "Situation"
    TASK = "Task"
    ACTION = "Action"
    CONSEQUENCE = "Consequence"

    @property
    def order(self) -> int:
        return _STAC_ORDER[self]

    @property
    def letter(self) -> str:
        return self.value[0]

    def __lt__(self, other: "STACLabel") -> bool:
        if not isinstance(other, STACLabel):
            return NotImplemented
        return self.order < other.order

    @classmethod
    def from_string(cls, s: str) -> "STACLabel":
        key = s.strip().lower()
        for label in cls:
            if key in (label.value.lower(), label.letter.lower()):
                return label
        raise ValueError(f"unknown STAC label: {s!r}")


_STAC_ORDER = {
    STACLabel.SITUATION: 0,
    STACLabel.TASK: 1,
    STACLabel.ACTION: 2,
    STACLabel.CONSEQUENCE: 3,
}

STAC_LABELS: tuple[STACLabel, ...] = (
    STACLabel.SITUATION,
    STACLabel.TASK,
    STACLabel.ACTION,
    STACLabel.CONSEQUENCE,
)


class Genericity(enum.Enum):
    SPECIFIC = "Specific"
    GENERIC = "Generic"


class Eventivity(enum.Enum):
    DYNAMIC = "Dynamic"
    STATIVE = "Stative"
    # Only legal when the three-way eventivity schema is active.
    MENTALLY_ACTIVE = "MentallyActive"


class Boundedness(enum.Enum):
    EPISODIC = "Episodic"
    HABITUAL = "Habitual"
    STATIC = "Static"


class Initiativity(enum.Enum):
    INITIATE = "Initiate"
    RECEIVE = "Receive"


class TimeStart(enum.Enum):
    PAST = "Past"
    CURRENT = "Current"


class TimeEnd(enum.Enum):
    CURRENT = "Current"
    FUTURE = "Future"


class Impact(enum.Enum):
    IMPACTFUL = "Impactful"
    RESOLVED = "Resolved"


# Canonical trait order. One-hot blocks, prompt catalogs, and report tables
# all follow this order.
TRAIT_NAMES: tuple[str, ...] = (
    "genericity",
    "eventivity",
    "boundedness",
    "initiativity",
    "time_start",
    "time_end",
    "impact",
)

TRAIT_ENUMS = {
    "genericity": Genericity,
    "eventivity": Eventivity,
    "boundedness": Boundedness,
    "initiativity": Initiativity,
    "time_start": TimeStart,
    "time_end": TimeEnd,
    "impact": Impact,
}


@dataclass(frozen=True)
class ExpertIndex:
    """One value per linguistic trait; no partial records."""

    genericity: Genericity
    eventivity: Eventivity
    boundedness: Boundedness
    initiativity: Initiativity
    time_start: TimeStart
    time_end: TimeEnd
    impact: Impact

    def trait(self, name: str) -> enum.Enum:
        if name not in TRAIT_NAMES:
            raise KeyError(f"unknown trait: {name!r}")
        return getattr(self, name)

    def as_dict(self) -> dict[str, str]:
        return {name: self.trait(name).value for name in TRAIT_NAMES}

    @classmethod
    def from_dict(cls, values: dict[str, str]) -> "ExpertIndex":
        missing = [n for n in TRAIT_NAMES if n not in values]
        if missing:
            raise ValueError(f"expert index missing traits: {missing}")
        unknown = sorted(set(values) - set(TRAIT_NAMES))
        if unknown:
            raise ValueError(f"expert index has unknown traits: {unknown}")
        kwargs = {}
        for name in TRAIT_NAMES:
            enum_cls = TRAIT_ENUMS[name]
            raw = values[name]
            try:
                kwargs[name] = enum_cls(raw)
            except ValueError:
                raise ValueError(f"trait {name!r} has unknown category {raw!r}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class Vertex:
    """A single simplified event sentence, one node of the causal graph."""

    id: str
    text: str
    source_span: Optional[tuple[int, int]] = None
    expert_index: Optional[ExpertIndex] = None
    stac: Optional[STACLabel] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("vertex id must be nonempty")
        if not self.text or not self.text.strip():
            raise ValueError(f"vertex {self.id!r} has empty text")
        if self.source_span is not None:
            start, end = self.source_span
            if start < 0 or end < start:
                raise ValueError(f"vertex {self.id!r} has invalid span {self.source_span}")

    def with_labels(
        self,
        expert_index: Optional[ExpertIndex] = None,
        stac: Optional[STACLabel] = None,
    ) -> "Vertex":
        return replace(
            self,
            expert_index=expert_index if expert_index is not None else self.expert_index,
            stac=stac if stac is not None else self.stac,
        )


Bond = tuple[STACLabel, STACLabel]


@dataclass(frozen=True)
class CausalEdge:
    """Directed causal link between two vertices.

    `bond` carries the (source STAC, target STAC) pair that licensed the
    edge; `origin_iteration` records whether it came from the pairwise
    proposal round (2) or the isolated-vertex refinement round (4).
    """

    from_id: str
    to_id: str
    bond: Bond
    origin_iteration: int = 2
    rationale: Optional[str] = None

    def __post_init__(self):
        if self.from_id == self.to_id:
            raise ValueError(f"self-loop edge on vertex {self.from_id!r}")
        if self.origin_iteration not in (2, 4):
            raise ValueError(f"origin_iteration must be 2 or 4, got {self.origin_iteration}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.from_id, self.to_id)

    @property
    def bond_label(self) -> str:
        return f"{self.bond[0].letter}→{self.bond[1].letter}"


@dataclass(frozen=True)
class BondSchema:
    """Allowlist of directed (STAC, STAC) pairs a causal edge may carry."""

    allowed: frozenset[Bond]

    def __post_init__(self):
        for pair in self.allowed:
            if not (isinstance(pair, tuple) and len(pair) == 2):
                raise ValueError(f"bond must be an ordered pair, got {pair!r}")

    def __contains__(self, pair: Bond) -> bool:
        return pair in self.allowed

    def sorted_pairs(self) -> list[Bond]:
        return sorted(self.allowed, key=lambda p: (p[0].order, p[1].order))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "BondSchema":
        resolved = frozenset(
            (STACLabel.from_string(a), STACLabel.from_string(b)) for a, b in pairs
        )
        return cls(allowed=resolved)


def bond_allowed(schema: BondSchema, from_label: STACLabel, to_label: STACLabel) -> bool:
    """True iff a `from_label` event may causally bond to a `to_label` event."""
    return (from_label, to_label) in schema


# Default allowlist: 13 of the 16 ordered pairs. A Task never bonds back to
# a Situation or to another Task, and an Action never bonds back to a
# Situation; everything else is a legal causal bond.
_S, _T, _A, _C = STAC_LABELS

DEFAULT_BOND_SCHEMA = BondSchema(
    allowed=frozenset(
        {
            (_S, _S), (_S, _T), (_S, _A), (_S, _C),
            (_T, _A), (_T, _C),
            (_A, _T), (_A, _A), (_A, _C),
            (_C, _S), (_C, _T), (_C, _A), (_C, _C),
        }
    )
)

# One-line working definitions per allowed bond, used to condition the
# LLM before edge proposal.
BOND_DEFINITIONS: dict[Bond, str] = {
    (_S, _S): "one state of affairs directly gives rise to another state of affairs",
    (_S, _T): "the current circumstances place a requirement or duty on an agent",
    (_S, _A): "the circumstances themselves move an agent to act, with no stated requirement in between",
    (_S, _C): "background conditions alone produce a lasting change of state",
    (_T, _A): "carrying out a stated requirement produces a concrete action",
    (_T, _C): "the existence of the requirement itself changes the state of affairs",
    (_A, _T): "an action creates a new requirement or duty for an agent",
    (_A, _A): "one action immediately triggers the next action in a chain of responses",
    (_A, _C): "an action brings about a lasting change or outcome",
    (_C, _S): "an outcome establishes a new state of affairs for what follows",
    (_C, _T): "an outcome imposes the agent's next obligation",
    (_C, _A): "an outcome directly drives the agent's next move",
    (_C, _C): "one outcome cascades into a further outcome",
}


@dataclass(frozen=True)
class GraphMetadata:
    """Provenance attached to a finished graph.

    `generated_at` is deterministic under replay: it echoes the newest
    cassette timestamp instead of the wall clock.
    """

    narrative_id: str
    generated_at: str = ""
    config_fingerprint: str = ""
    components: Optional[int] = None

    def as_dict(self) -> dict:
        out: dict = {
            "narrative_id": self.narrative_id,
            "generated_at": self.generated_at,
            "config_fingerprint": self.config_fingerprint,
        }
        if self.components is not None:
            out["components"] = self.components
        return out


@dataclass(frozen=True)
class CausalGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[CausalEdge, ...]
    metadata: GraphMetadata = field(default_factory=lambda: GraphMetadata(narrative_id=""))

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    def vertex(self, vertex_id: str) -> Vertex:
        for v in self.vertices:
            if v.id == vertex_id:
                return v
        raise KeyError(vertex_id)

    def structurally_equal(self, other: "CausalGraph") -> bool:
        """Equality up to vertex/edge ordering (the document canonicalizes
        order, so a round-tripped graph may list collections differently)."""
        return (
            sorted(self.vertices, key=lambda v: v.id)
            == sorted(other.vertices, key=lambda v: v.id)
            and sorted(self.edges, key=lambda e: e.key)
            == sorted(other.edges, key=lambda e: e.key)
            and self.metadata == other.metadata
        )

    def validate(self, schema: Optional[BondSchema] = None) -> None:
        """Raise IntegrityError on any structural invariant violation."""
        ids = [v.id for v in self.vertices]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise IntegrityError(f"duplicate vertex ids: {dupes}")
        known = set(ids)
        seen_edges: set[tuple[str, str]] = set()
        by_id = {v.id: v for v in self.vertices}
        for e in self.edges:
            for endpoint in (e.from_id, e.to_id):
                if endpoint not in known:
                    raise IntegrityError(f"edge references unknown vertex {endpoint!r}")
            if e.key in seen_edges:
                raise IntegrityError(f"duplicate directed edge {e.from_id}->{e.to_id}")
            seen_edges.add(e.key)
            u, v = by_id[e.from_id], by_id[e.to_id]
            if u.stac is not None and v.stac is not None and e.bond != (u.stac, v.stac):
                raise IntegrityError(
                    f"edge {e.from_id}->{e.to_id} bond {e.bond_label} does not match "
                    f"vertex labels ({u.stac.letter},{v.stac.letter})"
                )
            if schema is not None and not bond_allowed(schema, *e.bond):
                raise IntegrityError(
                    f"edge {e.from_id}->{e.to_id} bond {e.bond_label} not in schema"
                )

    def degree(self, vertex_id: str) -> int:
        return sum(1 for e in self.edges if vertex_id in (e.from_id, e.to_id))

    def isolated_vertices(self) -> list[Vertex]:
        touched = {x for e in self.edges for x in (e.from_id, e.to_id)}
        return [v for v in self.vertices if v.id not in touched]

    def weak_components(self) -> list[set[str]]:
        """Connected components ignoring edge direction."""
        parent = {v.id: v.id for v in self.vertices}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            ra, rb = find(e.from_id), find(e.to_id)
            if ra != rb:
                parent[ra] = rb
        groups: dict[str, set[str]] = {}
        for vid in parent:
            groups.setdefault(find(vid), set()).add(vid)
        return sorted(groups.values(), key=lambda g: (-len(g), min(g)))

    def is_connected(self) -> bool:
        return len(self.weak_components()) <= 1
