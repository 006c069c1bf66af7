"""Pipeline-wide configuration with TOML loading and override merging."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .alignment import TrainConfig
from .forest import ForestConfig


@dataclass
class GeoAttrConfig:
    k: int = 8
    seed: int = 42
    max_iter: int = 100
    tol: float = 1e-6
    n_init: int = 10
    min_area_ratio: float = 0.01


@dataclass
class PipelineConfig:
    """Defaults for every stage; flags and TOML sections override field-wise."""

    geoattr: GeoAttrConfig = field(default_factory=GeoAttrConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    samples_per_hypothesis: int = 2
    candidate_count: int = 6
    seed: int = 42


_SECTIONS = ("geoattr", "forest", "train")


def _apply_section(obj, values: dict):
    for key, value in values.items():
        if not hasattr(obj, key):
            raise KeyError(f"unknown config key {key!r} for {type(obj).__name__}")
        setattr(obj, key, value)


def load_pipeline_config(
    toml_path: str | Path | None = None,
    overrides: dict | None = None,
) -> PipelineConfig:
    """Build a config from defaults, then a TOML file, then explicit overrides.

    A top-level ``seed`` propagates into every stage unless that stage sets
    its own seed explicitly.
    """
    cfg = PipelineConfig()
    for source in (_read_toml(toml_path), overrides or {}):
        if not source:
            continue
        seed = source.get("seed")
        if seed is not None:
            cfg.seed = int(seed)
            cfg.geoattr.seed = int(seed)
            cfg.forest.seed = int(seed)
            cfg.train.seed = int(seed)
        for section in _SECTIONS:
            if section in source:
                _apply_section(getattr(cfg, section), dict(source[section]))
        for key in ("samples_per_hypothesis", "candidate_count"):
            if key in source:
                setattr(cfg, key, int(source[key]))
    cfg.forest = dataclasses.replace(cfg.forest)  # re-run validation
    cfg.train = dataclasses.replace(cfg.train)
    return cfg


def _read_toml(path: str | Path | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)
