"""Pipeline configuration.

A YAML file with the keys below; relative paths resolve against the file's
directory. Command-line flags override file values.

    model: model.msw            # MSW1 weights (required for inference)
    registry: registry.tgr      # TGR1 label registry (default: bundled)
    centroids: centroids.npz    # depth baseline centroids (optional)
    frames: 32                  # temporal length T fed to the model
    scales: 3                   # adjacency hops K (>= every layer's K)
    window: 3                   # G3D window length; must match the weights
    alpha: 0.5                  # skeleton-stream weight in fusion
    fusion_rule: sum            # sum | product
    classes: [1, 2, ...]        # class ids in model output order (default: registry order)
    depth_near: 500             # mm mapped to 0
    depth_far: 4500             # mm mapped to 255
    roi_threshold: 0.0
    temperature: 1.0            # nearest-centroid softmax temperature
    centroid_side: 64           # resize side for the depth baseline
    ref_joint: 1                # translation reference joint
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError

_KEYS = {
    "model": "model_path",
    "registry": "registry_path",
    "centroids": "centroids_path",
    "frames": "frames",
    "scales": "scales",
    "window": "window",
    "alpha": "alpha",
    "fusion_rule": "fusion_rule",
    "classes": "classes",
    "depth_near": "depth_near",
    "depth_far": "depth_far",
    "roi_threshold": "roi_threshold",
    "temperature": "temperature",
    "centroid_side": "centroid_side",
    "ref_joint": "ref_joint",
}
_PATH_FIELDS = ("model_path", "registry_path", "centroids_path")


def default_registry_path() -> Path:
    return Path(str(resources.files("tactile_har") / "data" / "default_registry.tgr"))


@dataclass(frozen=True)
class PipelineConfig:
    model_path: Path | None = None
    registry_path: Path | None = None
    centroids_path: Path | None = None
    frames: int = 32
    scales: int | None = None
    window: int | None = None
    alpha: float = 0.5
    fusion_rule: str = "sum"
    classes: tuple[int, ...] | None = None
    depth_near: float = 500.0
    depth_far: float = 4500.0
    roi_threshold: float = 0.0
    temperature: float = 1.0
    centroid_side: int | None = 64
    ref_joint: int = 1

    def __post_init__(self):
        if self.frames < 1:
            raise ConfigError(f"frames must be >= 1, got {self.frames}")
        if self.scales is not None and self.scales < 0:
            raise ConfigError(f"scales must be >= 0, got {self.scales}")
        if self.window is not None and (self.window < 1 or self.window % 2 == 0):
            raise ConfigError(f"window must be a positive odd integer, got {self.window}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.fusion_rule not in ("sum", "product"):
            raise ConfigError(f"fusion_rule must be 'sum' or 'product', got {self.fusion_rule!r}")
        if not self.depth_far > self.depth_near:
            raise ConfigError("depth_far must exceed depth_near")
        if self.roi_threshold < 0:
            raise ConfigError("roi_threshold must be nonnegative")
        if not self.temperature > 0:
            raise ConfigError("temperature must be positive")
        if self.centroid_side is not None and self.centroid_side < 1:
            raise ConfigError("centroid_side must be positive")
        if not 1 <= self.ref_joint <= 20:
            raise ConfigError("ref_joint must be in 1..20")
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))

    def with_overrides(self, **overrides) -> "PipelineConfig":
        changes = {k: v for k, v in overrides.items() if v is not None}
        for key in _PATH_FIELDS:
            if key in changes:
                changes[key] = Path(changes[key])
        return dataclasses.replace(self, **changes)

    @property
    def registry(self) -> Path:
        return self.registry_path or default_registry_path()


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    unknown = sorted(set(raw) - set(_KEYS))
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {', '.join(unknown)}")
    values = {}
    for key, field_name in _KEYS.items():
        if key in raw and raw[key] is not None:
            value = raw[key]
            if field_name in _PATH_FIELDS:
                value = (path.parent / value).resolve()
            values[field_name] = value
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
