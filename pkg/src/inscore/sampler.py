"""Per-image parameter sampling and the ablation knobs."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .geometry import InstanceParams
from .rng import SeedTree, derive_stream

__all__ = [
    "ConfigError",
    "GenConfig",
    "SceneSpec",
    "apply_occlusion_rate",
    "assign_category",
    "sample_instance",
    "sample_scene",
    "load_config",
]

LABEL_MODES = ("uniform", "param-binned")
CATEGORY_GRID = 16


class ConfigError(ValueError):
    """Invalid generation config; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class GenConfig:
    width: int = 512
    height: int = 512
    max_instances: int = 32
    ring_range: tuple[int, int] = (1, 50)
    vertex_range: tuple[int, int] = (3, 502)
    num_classes: int = 256
    # None -> (min(W, H) / 64, min(W, H) / 6)
    radius_range: tuple[float, float] | None = None
    line_width_range: tuple[float, float] = (2.0, 12.0)
    aspect_range: tuple[float, float] = (0.5, 2.0)
    # upper bound is further capped at noise_cap * line_width per instance
    noise_scale_range: tuple[float, float] = (0.0, 12.0)
    noise_cap: float = 0.9
    noise_frequency: float = 8.0
    occlusion_rate: float = 100.0
    mask_offset: int = 0
    label_mode: str = "uniform"
    antialias: bool = False
    master_seed: int = 0

    def __post_init__(self):
        for name in ("ring_range", "vertex_range", "radius_range", "line_width_range",
                     "aspect_range", "noise_scale_range"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(value))
        self.validate()

    def validate(self) -> None:
        def ordered(name, lo_min=None, strict_lo=False):
            value = getattr(self, name)
            if value is None:
                return
            if len(value) != 2:
                raise ConfigError(name, f"expected [min, max], got {list(value)}")
            lo, hi = value
            if lo > hi:
                raise ConfigError(name, f"min {lo} exceeds max {hi}")
            if lo_min is not None and (lo <= lo_min if strict_lo else lo < lo_min):
                raise ConfigError(name, f"min {lo} must be {'>' if strict_lo else '>='} {lo_min}")

        if self.width <= 0:
            raise ConfigError("width", f"must be positive, got {self.width}")
        if self.height <= 0:
            raise ConfigError("height", f"must be positive, got {self.height}")
        if self.max_instances < 1:
            raise ConfigError("max_instances", f"must be >= 1, got {self.max_instances}")
        ordered("ring_range", 1)
        ordered("vertex_range", 3)
        if self.num_classes < 1:
            raise ConfigError("num_classes", f"must be >= 1, got {self.num_classes}")
        ordered("radius_range", 0, strict_lo=True)
        ordered("line_width_range", 1)
        ordered("aspect_range", 0, strict_lo=True)
        ordered("noise_scale_range", 0)
        if not 0 < self.noise_cap < 1:
            raise ConfigError("noise_cap", f"must lie in (0, 1), got {self.noise_cap}")
        if self.noise_scale_range[0] >= self.noise_cap * self.line_width_range[0]:
            raise ConfigError("noise_scale_range",
                              f"min {self.noise_scale_range[0]} must be below noise_cap * min line width "
                              f"= {self.noise_cap * self.line_width_range[0]}")
        if not self.noise_frequency > 0:
            raise ConfigError("noise_frequency", f"must be positive, got {self.noise_frequency}")
        if not self.occlusion_rate > 0:
            raise ConfigError("occlusion_rate", f"must be positive, got {self.occlusion_rate}")
        if self.mask_offset < 0:
            raise ConfigError("mask_offset", f"must be >= 0, got {self.mask_offset}")
        if self.label_mode not in LABEL_MODES:
            raise ConfigError("label_mode", f"must be one of {LABEL_MODES}, got {self.label_mode!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", f"must be a 64-bit unsigned integer, got {self.master_seed}")

    @property
    def base_radius_range(self) -> tuple[float, float]:
        if self.radius_range is not None:
            return self.radius_range
        side = min(self.width, self.height)
        return (side / 64, side / 6)

    def resolved(self) -> "GenConfig":
        return dataclasses.replace(self, radius_range=self.base_radius_range)

    def replace(self, **changes) -> "GenConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown config field")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from exc

    @property
    def seed_tree(self) -> SeedTree:
        return SeedTree(self.master_seed)


def load_config(path: str | Path, **overrides) -> GenConfig:
    """Read a YAML (or JSON) config file, then apply ``overrides``."""
    text = Path(path).read_text()
    data = yaml.safe_load(text) if text.strip() else {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must contain a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return GenConfig.from_dict(data)


@dataclass(frozen=True)
class SceneSpec:
    image_index: int
    instances: tuple[InstanceParams, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.instances)


def apply_occlusion_rate(config: GenConfig) -> tuple[float, float]:
    lo, hi = config.base_radius_range
    if config.occlusion_rate == 100:
        return lo, hi
    s = config.occlusion_rate / 100.0
    return lo * s, hi * s


def _category_bin(value: int, lo: int, hi: int) -> int:
    return (value - lo) * CATEGORY_GRID // (hi - lo + 1)


def assign_category(num_rings: int, num_vertices: int, config: GenConfig, rng: np.random.Generator) -> int:
    if config.label_mode == "uniform":
        return int(rng.integers(1, config.num_classes, endpoint=True))
    bucket = (_category_bin(num_rings, *config.ring_range) * CATEGORY_GRID
              + _category_bin(num_vertices, *config.vertex_range))
    # 256 grid cells folded onto C classes
    return bucket * config.num_classes // (CATEGORY_GRID * CATEGORY_GRID) + 1


def sample_instance(config: GenConfig, tree: SeedTree, depth_index: int) -> InstanceParams:
    rng = tree.stream()
    r_lo, r_hi = apply_occlusion_rate(config)
    num_rings = int(rng.integers(config.ring_range[0], config.ring_range[1], endpoint=True))
    num_vertices = int(rng.integers(config.vertex_range[0], config.vertex_range[1], endpoint=True))
    radius = float(rng.uniform(r_lo, r_hi))
    line_width = float(rng.uniform(*config.line_width_range))
    aspect = tuple(float(a) for a in rng.uniform(*config.aspect_range, size=2))
    lam_lo = config.noise_scale_range[0]
    lam_hi = min(config.noise_scale_range[1], config.noise_cap * line_width)
    noise_scale = tuple(float(a) for a in rng.uniform(lam_lo, lam_hi, size=2))
    center = (float(rng.uniform(0, config.width)), float(rng.uniform(0, config.height)))
    category = assign_category(num_rings, num_vertices, config, tree.child("category", 0).stream())
    return InstanceParams(num_rings, num_vertices, radius, line_width, aspect, noise_scale,
                          center, category, depth_index)


def instance_tree(config: GenConfig, image_index: int, slot: int) -> SeedTree:
    return config.seed_tree.child("image", image_index).child("instance", slot)


def sample_scene(config: GenConfig, image_index: int, tree: SeedTree | None = None) -> SceneSpec:
    """Sample the instances of one image, back (index 0) to front."""
    if image_index < 0:
        raise ValueError(f"image_index must be >= 0, got {image_index}")
    if tree is None:
        tree = config.seed_tree
    image_tree = tree.child("image", image_index)
    # instance k draws only from image_tree / ("instance", k)
    count = int(derive_stream(image_tree, "count", 0).integers(1, config.max_instances, endpoint=True))
    instances = tuple(sample_instance(config, image_tree.child("instance", k), k + 1) for k in range(count))
    return SceneSpec(image_index, instances)


def config_digest(config: GenConfig) -> str:
    blob = json.dumps(config.resolved().to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
