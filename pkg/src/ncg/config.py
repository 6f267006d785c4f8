"""Pipeline configuration: a versioned JSON file, fully echoed into run
metadata, whose canonical fingerprint gates stage re-execution."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigurationError
from .expert_index import DEFAULT_TRAIT_SCHEMA, THREE_WAY_EVENTIVITY_SCHEMA, TraitSchema
from .gateway import GenerationParams
from .learners import TreeParams
from .model import BondSchema, DEFAULT_BOND_SCHEMA
from .stac import StacVariant

CONFIG_VERSION = 1

_KNOWN_KEYS = {
    "version", "model_name", "temperature", "max_tokens", "seed", "split_seed",
    "llm_base_url", "embed_url", "embedder", "bond_schema", "eventivity_arity",
    "max_vertices", "max_refinement_rounds", "mode", "max_in_flight",
    "stac_variant", "dataset", "cassette", "tree",
}
_TREE_KEYS = {"max_depth", "n_trees", "learning_rate", "l2"}


@dataclass(frozen=True)
class PipelineConfig:
    version: int = CONFIG_VERSION
    model_name: str = "gpt-4o"
    temperature: float = 0.0
    max_tokens: int = 1024
    seed: int = 0
    split_seed: int = 0
    llm_base_url: Optional[str] = None
    embed_url: Optional[str] = None
    embedder: str = "mock"
    bond_schema: Optional[tuple[tuple[str, str], ...]] = None
    eventivity_arity: int = 2
    max_vertices: int = 40
    max_refinement_rounds: int = 2
    mode: str = "replay"
    max_in_flight: int = 4
    stac_variant: str = "tree-combined"
    dataset: Optional[str] = None
    cassette: Optional[str] = None
    tree: tuple[tuple[str, float], ...] = field(
        default_factory=lambda: tuple(
            sorted({"max_depth": 6, "n_trees": 200, "learning_rate": 0.1, "l2": 1.0}.items())
        )
    )

    def __post_init__(self):
        if self.version != CONFIG_VERSION:
            raise ConfigurationError(f"unsupported config version {self.version}")
        if self.mode not in ("live", "record", "replay"):
            raise ConfigurationError(f"mode must be live, record, or replay, got {self.mode!r}")
        if self.embedder not in ("mock", "http"):
            raise ConfigurationError(f"embedder must be mock or http, got {self.embedder!r}")
        if self.eventivity_arity not in (2, 3):
            raise ConfigurationError("eventivity_arity must be 2 or 3")
        if self.max_vertices < 1:
            raise ConfigurationError("max_vertices must be positive")
        try:
            StacVariant(self.stac_variant)
        except ValueError:
            raise ConfigurationError(f"unknown stac_variant {self.stac_variant!r}") from None

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
            "split_seed": self.split_seed,
            "llm_base_url": self.llm_base_url,
            "embed_url": self.embed_url,
            "embedder": self.embedder,
            "bond_schema": [list(p) for p in self.bond_schema] if self.bond_schema else None,
            "eventivity_arity": self.eventivity_arity,
            "max_vertices": self.max_vertices,
            "max_refinement_rounds": self.max_refinement_rounds,
            "mode": self.mode,
            "max_in_flight": self.max_in_flight,
            "stac_variant": self.stac_variant,
            "dataset": self.dataset,
            "cassette": self.cassette,
            "tree": dict(self.tree),
        }
        return out

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def gen_params(self) -> GenerationParams:
        return GenerationParams(
            model_name=self.model_name,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            seed=self.seed,
        )

    def bond_schema_obj(self) -> BondSchema:
        if self.bond_schema is None:
            return DEFAULT_BOND_SCHEMA
        return BondSchema.from_pairs(self.bond_schema)

    def trait_schema(self) -> TraitSchema:
        return DEFAULT_TRAIT_SCHEMA if self.eventivity_arity == 2 else THREE_WAY_EVENTIVITY_SCHEMA

    def tree_params(self) -> TreeParams:
        values = dict(self.tree)
        return TreeParams(
            max_depth=int(values["max_depth"]),
            n_trees=int(values["n_trees"]),
            learning_rate=float(values["learning_rate"]),
            l2=float(values["l2"]),
        )

    def stac_variant_obj(self) -> StacVariant:
        return StacVariant(self.stac_variant)

    def with_mode(self, mode: str) -> "PipelineConfig":
        return replace(self, mode=mode)


def config_from_dict(raw: dict) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be an object")
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs = dict(raw)
    if "bond_schema" in kwargs and kwargs["bond_schema"] is not None:
        pairs = kwargs["bond_schema"]
        if not isinstance(pairs, list) or not all(
            isinstance(p, list) and len(p) == 2 for p in pairs
        ):
            raise ConfigurationError("bond_schema must be a list of [from, to] pairs")
        kwargs["bond_schema"] = tuple((p[0], p[1]) for p in pairs)
    if "tree" in kwargs:
        tree = kwargs["tree"]
        if not isinstance(tree, dict) or set(tree) - _TREE_KEYS:
            raise ConfigurationError(
                f"tree section accepts keys {sorted(_TREE_KEYS)}, got {sorted(tree)}"
            )
        merged = {"max_depth": 6, "n_trees": 200, "learning_rate": 0.1, "l2": 1.0}
        merged.update(tree)
        kwargs["tree"] = tuple(sorted(merged.items()))
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad config: {exc}") from exc


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def save_config(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
