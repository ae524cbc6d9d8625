"""Pipeline configuration: YAML file, nested sections, dotted overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

FAMILIES = ("numeric", "lm", "clusters", "topics", "pos", "bow")


@dataclass(frozen=True)
class Resources:
    dictionary: str | None = None
    easy_words: str | None = None
    embeddings: str | None = None
    lexicon: str | None = None
    external_tags: str | None = None


@dataclass(frozen=True)
class LMSection:
    order: int = 3
    rare_threshold: int = 10
    unk_singletons: bool = True


@dataclass(frozen=True)
class ClusterSection:
    k: int = 1000
    max_iters: int = 100
    tol: float = 1e-6
    normalize: bool = False


@dataclass(frozen=True)
class TopicSection:
    counts: tuple = (30, 40, 50, 60)
    alpha: float | None = None
    beta: float = 0.01
    burn_in: int = 200
    sample_every: int = 10
    n_samples: int = 5
    min_df: int = 2
    infer_iters: int = 50


@dataclass(frozen=True)
class BowSection:
    min_df: int = 2
    bigrams_only: bool = False


@dataclass(frozen=True)
class ModelSection:
    type: str = "gbt"
    max_depth: int = 3
    learning_rate: float = 0.06
    n_rounds: int = 4000
    min_samples_leaf: int = 20
    reg_lambda: float = 1.0
    goss: tuple | None = None
    class_weighting: str = "inverse"  # or "none"
    l2: float = 1e-3


_SECTIONS = {
    "resources": Resources,
    "lm": LMSection,
    "clusters": ClusterSection,
    "topics": TopicSection,
    "bow": BowSection,
    "model": ModelSection,
}


@dataclass(frozen=True)
class PipelineConfig:
    families: tuple = FAMILIES
    seed: int = 0
    resources: Resources = field(default_factory=Resources)
    lm: LMSection = field(default_factory=LMSection)
    clusters: ClusterSection = field(default_factory=ClusterSection)
    topics: TopicSection = field(default_factory=TopicSection)
    bow: BowSection = field(default_factory=BowSection)
    model: ModelSection = field(default_factory=ModelSection)

    def __post_init__(self):
        fams = tuple(self.families)
        unknown = [f for f in fams if f not in FAMILIES]
        if unknown:
            raise ValueError(f"unknown feature families: {unknown}")
        if not fams:
            raise ValueError("at least one feature family must be enabled")
        # canonical order so that layouts never depend on how the list was written
        object.__setattr__(self, "families", tuple(f for f in FAMILIES if f in fams))
        object.__setattr__(self, "topics", dataclasses.replace(
            self.topics, counts=tuple(sorted(int(t) for t in self.topics.counts))))
        if self.model.goss is not None:
            object.__setattr__(self, "model", dataclasses.replace(
                self.model, goss=tuple(float(v) for v in self.model.goss)))
        if self.model.type not in ("gbt", "logreg"):
            raise ValueError(f"unknown model type {self.model.type!r}")

    def with_families(self, families) -> "PipelineConfig":
        return dataclasses.replace(self, families=tuple(families))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["families"] = list(self.families)
        out["topics"]["counts"] = list(self.topics.counts)
        if self.model.goss is not None:
            out["model"]["goss"] = list(self.model.goss)
        return out

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "PipelineConfig":
        data = dict(data or {})
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in _SECTIONS:
                section = _SECTIONS[key]
                names = {f.name for f in dataclasses.fields(section)}
                bad = set(value or {}) - names
                if bad:
                    raise ValueError(f"unknown keys in section {key!r}: {sorted(bad)}")
                value = dict(value or {})
                if key == "topics" and "counts" in value:
                    value["counts"] = tuple(value["counts"])
                if key == "model" and value.get("goss") is not None:
                    value["goss"] = tuple(value["goss"])
                if key == "resources" and base_dir is not None:
                    value = {
                        k: (str((Path(base_dir) / v)) if v is not None and not Path(v).is_absolute() else v)
                        for k, v in value.items()
                    }
                kwargs[key] = section(**value)
            elif key == "families":
                kwargs[key] = tuple(value)
            elif key == "seed":
                kwargs[key] = int(value)
            else:
                raise ValueError(f"unknown configuration key {key!r}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        return cls.from_dict(data, base_dir=path.parent)

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    def override(self, assignments) -> "PipelineConfig":
        """Apply ``section.key=value`` strings (values parsed as YAML scalars)."""
        data = self.to_dict()
        for item in assignments:
            if "=" not in item:
                raise ValueError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            value = yaml.safe_load(raw)
            parts = key.strip().split(".")
            target = data
            for p in parts[:-1]:
                if p not in target or not isinstance(target[p], dict):
                    raise ValueError(f"unknown configuration section {p!r}")
                target = target[p]
            if parts[-1] not in target:
                raise ValueError(f"unknown configuration key {key!r}")
            target[parts[-1]] = value
        return PipelineConfig.from_dict(data)
