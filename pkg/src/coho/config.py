"""Declarative pipeline configuration loaded from one YAML/JSON file.

Unknown keys are rejected so typos fail fast.  COHO_SEED in the
environment overrides the configured seed everywhere.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

import yaml

from .errors import ValidationError


def _check_keys(section: dict, cls, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")


@dataclass
class PathsConfig:
    data_dir: str = "data"
    blocks: str = "data/blocks.geojson"
    buildings: str = "data/buildings.geojson"
    graph: str = "data/city.graph.json"
    bvae_checkpoint: str = "data/bvae.ckpt"
    codebook: str = "data/codebook.json"
    gmae_checkpoint: str = "data/gmae.ckpt"
    generated: str = "data/generated.geojson"
    generated_graph: str = "data/generated.graph.json"
    trace: str = "data/generated.trace.json"
    report: str = "data/report.json"
    svg: str = "data/city.svg"


@dataclass
class ToySection:
    communities_x: int = 6
    communities_y: int = 6


@dataclass
class IngestSection:
    epsilon: float = 25.0
    k_max: int = 8
    crs: str = "local-meters"
    iou_threshold: float = 0.3
    default_height: float = 6.0


@dataclass
class BvaeSection:
    slot_capacity: int = 10
    latent_dim: int = 32
    heads: int = 4
    hidden: int = 64
    lr: float = 1e-3
    batch_size: int = 32
    steps: int = 3000
    kl_weight: float = 1e-3


@dataclass
class QuantizerSection:
    levels: int = 20


@dataclass
class GmaeSection:
    depth: int = 3
    heads: int = 4
    hidden: int = 128
    lr: float = 1e-3
    batch_subgraphs: int = 8
    steps: int = 1500
    subgraph_radius: float = 500.0
    mask_mean: float = 0.55
    mask_std: float = 0.25
    mask_lo: float = 0.5
    mask_hi: float = 1.0


@dataclass
class GenerateSection:
    iterations: int = 12
    family: str = "cosine"
    prior_fraction: float = 0.0


@dataclass
class PipelineConfig:
    city_id: str = "toy"
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    toy: ToySection = field(default_factory=ToySection)
    ingest: IngestSection = field(default_factory=IngestSection)
    bvae: BvaeSection = field(default_factory=BvaeSection)
    quantizer: QuantizerSection = field(default_factory=QuantizerSection)
    gmae: GmaeSection = field(default_factory=GmaeSection)
    generate: GenerateSection = field(default_factory=GenerateSection)


_SECTIONS = {
    "paths": PathsConfig, "toy": ToySection, "ingest": IngestSection,
    "bvae": BvaeSection, "quantizer": QuantizerSection,
    "gmae": GmaeSection, "generate": GenerateSection,
}


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    raw: dict = {}
    if path is not None:
        with open(path) as f:
            text = f.read()
        raw = (json.loads(text) if str(path).endswith(".json")
               else yaml.safe_load(text)) or {}
    if overrides:
        raw = _deep_merge(raw, overrides)
    top_allowed = {"city_id", "seed"} | set(_SECTIONS)
    unknown = set(raw) - top_allowed
    if unknown:
        raise ValidationError(f"config: unknown keys {sorted(unknown)}")
    cfg = PipelineConfig()
    cfg.city_id = raw.get("city_id", cfg.city_id)
    cfg.seed = int(raw.get("seed", cfg.seed))
    for name, cls in _SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ValidationError(f"config: section {name} must be a mapping")
        _check_keys(section, cls, f"config.{name}")
        setattr(cfg, name, cls(**section))
    env_seed = os.environ.get("COHO_SEED")
    if env_seed is not None:
        cfg.seed = int(env_seed)
    return cfg


def _deep_merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out
