"""Scenario configuration: schema, validation, and synthetic frame streams.

A scenario is one JSON document. Preset names (catalog, confusion matrices,
difficulty model, platforms) are resolved at load time, so a parsed config is
self-contained and its digest covers the resolved content.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import presets
from .domain import (
    BoundingBox,
    ChannelProfile,
    ClassCatalog,
    Frame,
    PlatformProfile,
    Proposal,
    crop_bytes_for,
)
from .modelmath import iou
from .oracles import ConfusionMatrix, DifficultyModel, LocalizerModel, SeededRng
from .pipeline import OracleSet, RoutingPolicy

__all__ = [
    "ConfigError",
    "ParseError",
    "ValidationError",
    "PlacementError",
    "FrameSpec",
    "ObjectCountSpec",
    "CropSizeSpec",
    "ScenarioConfig",
    "generate_frames",
    "load_config",
    "load_config_dict",
    "load_preset",
    "FRAME_STREAM",
]

# Spawn-key namespace for frame generation; disjoint from the pipeline's.
FRAME_STREAM = 0

_PLACEMENT_ATTEMPTS = 100


class ConfigError(ValueError):
    """Base class for configuration failures."""


class ParseError(ConfigError):
    """Document is not valid JSON or not an object."""


class ValidationError(ConfigError):
    """A field failed validation; carries the dotted field path."""

    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class PlacementError(RuntimeError):
    """Objects could not be placed without exceeding the overlap cap."""


@dataclass(frozen=True)
class FrameSpec:
    """Geometry and encoding of generated frames."""

    width: int = 1920
    height: int = 1080
    bytes_per_pixel: float = 3.0
    max_gt_iou: float = 0.25

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError(f"frame must be at least 2x2, got {self.width}x{self.height}")
        if self.bytes_per_pixel <= 0:
            raise ValueError(f"bytes_per_pixel must be > 0, got {self.bytes_per_pixel!r}")
        if not 0.0 <= self.max_gt_iou < 1.0:
            raise ValueError(f"max_gt_iou must be in [0, 1), got {self.max_gt_iou!r}")

    @property
    def frame_bytes(self) -> int:
        return math.ceil(self.width * self.height * self.bytes_per_pixel)

    def to_dict(self) -> dict[str, Any]:
        return {
            "width": self.width,
            "height": self.height,
            "bytes_per_pixel": self.bytes_per_pixel,
            "max_gt_iou": self.max_gt_iou,
        }


@dataclass(frozen=True)
class ObjectCountSpec:
    """Objects per frame: a fixed count or a Poisson draw."""

    kind: str = "fixed"
    value: float = 4

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "poisson"):
            raise ValueError(f"kind must be 'fixed' or 'poisson', got {self.kind!r}")
        if self.value < 0:
            raise ValueError(f"value must be >= 0, got {self.value!r}")
        if self.kind == "fixed" and self.value != int(self.value):
            raise ValueError(f"fixed count must be an integer, got {self.value!r}")

    @property
    def mean(self) -> float:
        return float(self.value)

    def draw(self, rng: SeededRng) -> int:
        if self.kind == "fixed":
            return int(self.value)
        return rng.poisson(self.value)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class CropSizeSpec:
    """Object box sides drawn uniformly, scaled by a calibration knob."""

    side_lo: float
    side_hi: float
    scale: float = 1.0
    kind: str = "uniform-side"

    def __post_init__(self) -> None:
        if self.kind != "uniform-side":
            raise ValueError(f"unsupported crop size kind {self.kind!r}")
        if not 0 < self.side_lo <= self.side_hi:
            raise ValueError(
                f"need 0 < side_lo <= side_hi, got ({self.side_lo!r}, {self.side_hi!r})"
            )
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale!r}")

    @property
    def mean_side(self) -> float:
        return self.scale * (self.side_lo + self.side_hi) / 2.0

    @property
    def mean_area(self) -> float:
        # Width and height are drawn independently.
        return self.mean_side**2

    @property
    def max_side(self) -> float:
        return self.scale * self.side_hi

    def draw_sides(self, rng: SeededRng) -> tuple[float, float]:
        u = rng.uniforms(2)
        lo, hi = self.side_lo, self.side_hi
        return (
            self.scale * (lo + (hi - lo) * float(u[0])),
            self.scale * (lo + (hi - lo) * float(u[1])),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "side_lo": self.side_lo,
            "side_hi": self.side_hi,
            "scale": self.scale,
        }


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved description of one reproducible scenario."""

    seed: int
    frame_count: int
    frame: FrameSpec
    objects_per_frame: ObjectCountSpec
    crop_size: CropSizeSpec
    catalog: ClassCatalog
    edge_cm: ConfusionMatrix
    cloud_cm: ConfusionMatrix
    difficulty: DifficultyModel
    localizer: LocalizerModel
    routing: RoutingPolicy
    edge_platform: PlatformProfile
    cloud_platform: PlatformProfile
    channel: ChannelProfile

    def __post_init__(self) -> None:
        if self.frame_count < 0:
            raise ValueError(f"frame_count must be >= 0, got {self.frame_count!r}")
        if self.crop_size.max_side > min(self.frame.width, self.frame.height):
            raise ValueError(
                f"largest crop side {self.crop_size.max_side} exceeds frame "
                f"{self.frame.width}x{self.frame.height}"
            )
        if self.edge_platform.role != "edge":
            raise ValueError(f"edge platform {self.edge_platform.name!r} has role 'cloud'")
        if self.cloud_platform.role != "cloud":
            raise ValueError(f"cloud platform {self.cloud_platform.name!r} has role 'edge'")

    def build_frames(self) -> list[Frame]:
        return generate_frames(self)

    def build_oracles(self) -> OracleSet:
        return OracleSet(
            catalog=self.catalog,
            localizer=self.localizer,
            difficulty=self.difficulty,
            edge_cm=self.edge_cm,
            cloud_cm=self.cloud_cm,
            channel=self.channel,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "frame_count": self.frame_count,
            "frame": self.frame.to_dict(),
            "objects_per_frame": self.objects_per_frame.to_dict(),
            "crop_size": self.crop_size.to_dict(),
            "catalog": self.catalog.to_dict(),
            "confusion": {"edge": self.edge_cm.to_dict(), "cloud": self.cloud_cm.to_dict()},
            "difficulty": self.difficulty.to_dict(),
            "localizer": self.localizer.to_dict(),
            "routing": self.routing.to_dict(),
            "platforms": {
                "edge": self.edge_platform.to_dict(),
                "cloud": self.cloud_platform.to_dict(),
            },
            "channel": self.channel.to_dict(),
        }


def _place_box(
    width: float,
    height: float,
    existing: list[BoundingBox],
    spec: FrameSpec,
    rng: SeededRng,
) -> BoundingBox:
    """Uniform position with rejection on overlap beyond the configured cap.

    Sides stay fixed across retries so the size distribution is unbiased.
    """
    for _ in range(_PLACEMENT_ATTEMPTS):
        u = rng.uniforms(2)
        x0 = float(u[0]) * (spec.width - width)
        y0 = float(u[1]) * (spec.height - height)
        box = BoundingBox(x0, y0, x0 + width, y0 + height)
        if all(iou(box, other) <= spec.max_gt_iou for other in existing):
            return box
    raise PlacementError(
        f"could not place a {width:.0f}x{height:.0f} object within "
        f"{_PLACEMENT_ATTEMPTS} attempts; frame too crowded"
    )


def generate_frames(config: ScenarioConfig) -> list[Frame]:
    """Deterministic synthetic frame stream for one scenario.

    Driven by a dedicated RNG substream, so routing policy and pipeline
    draws never change the frames.
    """
    rng = SeededRng(config.seed, spawn_key=(FRAME_STREAM,))
    frame_bytes = config.frame.frame_bytes
    num_classes = config.catalog.num_classes
    bpp = config.frame.bytes_per_pixel
    frames: list[Frame] = []
    for frame_id in range(config.frame_count):
        count = config.objects_per_frame.draw(rng)
        boxes: list[BoundingBox] = []
        objects: list[Proposal] = []
        for _ in range(count):
            side_w, side_h = config.crop_size.draw_sides(rng)
            box = _place_box(side_w, side_h, boxes, config.frame, rng)
            boxes.append(box)
            true_class = min(int(rng.uniform() * num_classes), num_classes - 1)
            objects.append(
                Proposal(
                    box=box,
                    objectness=1.0,
                    true_class=true_class,
                    crop_bytes=crop_bytes_for(box, bpp),
                )
            )
        frames.append(
            Frame(
                frame_id=frame_id,
                width=config.frame.width,
                height=config.frame.height,
                bytes=frame_bytes,
                objects=tuple(objects),
            )
        )
    return frames


def _field(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require(data: dict[str, Any], key: str, path: str = "") -> Any:
    if key not in data:
        raise ValidationError(_field(path, key), "missing required field")
    return data[key]


def _number(data: dict[str, Any], key: str, path: str, default: Any = None) -> float:
    if key not in data:
        if default is not None:
            return default
        raise ValidationError(_field(path, key), "missing required field")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(_field(path, key), f"expected a number, got {value!r}")
    return float(value)


def _integer(data: dict[str, Any], key: str, path: str, default: Any = None) -> int:
    value = _number(data, key, path, default)
    if value != int(value):
        raise ValidationError(_field(path, key), f"expected an integer, got {value!r}")
    return int(value)


def _section(data: dict[str, Any], key: str, path: str = "") -> dict[str, Any]:
    if key not in data:
        raise ValidationError(_field(path, key), "missing required section")
    value = data[key]
    if not isinstance(value, dict):
        raise ValidationError(_field(path, key), f"expected an object, got {type(value).__name__}")
    return value


def _build(path: str, factory, *args, **kwargs):
    """Run a validating constructor, rewrapping failures with the field path."""
    try:
        return factory(*args, **kwargs)
    except presets.UnknownPresetError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(path, str(exc)) from exc


def _resolve_catalog(value: Any) -> ClassCatalog:
    if isinstance(value, str):
        return presets.catalog(value)
    if isinstance(value, dict):
        return _build("catalog", ClassCatalog.from_dict, value)
    raise ValidationError("catalog", "expected a preset name or an object with 'names'")


def _resolve_confusion(value: Any, path: str) -> ConfusionMatrix:
    if isinstance(value, str):
        return presets.confusion_matrix(value)
    if isinstance(value, dict):
        return _build(path, ConfusionMatrix.from_dict, value)
    raise ValidationError(path, "expected a preset name or a matrix object")


def _resolve_difficulty(value: Any) -> DifficultyModel:
    if isinstance(value, str):
        return presets.difficulty_model(value)
    if isinstance(value, dict):
        return _build("difficulty", DifficultyModel.from_dict, value)
    raise ValidationError("difficulty", "expected a preset name or an object")


def _resolve_platform(value: Any, path: str) -> PlatformProfile:
    if isinstance(value, str):
        return presets.platform(value)
    if isinstance(value, dict):
        return _build(path, PlatformProfile.from_dict, value)
    raise ValidationError(path, "expected a preset name or an object")


def load_config_dict(data: Any) -> ScenarioConfig:
    """Validate a parsed JSON document into a :class:`ScenarioConfig`."""
    if not isinstance(data, dict):
        raise ParseError(f"config document must be a JSON object, got {type(data).__name__}")

    seed = _integer(data, "seed", "")
    frame_count = _integer(data, "frame_count", "")
    if frame_count < 0:
        raise ValidationError("frame_count", f"must be >= 0, got {frame_count}")

    frame_data = _section(data, "frame")
    frame = _build(
        "frame",
        FrameSpec,
        width=_integer(frame_data, "width", "frame", 1920),
        height=_integer(frame_data, "height", "frame", 1080),
        bytes_per_pixel=_number(frame_data, "bytes_per_pixel", "frame", 3.0),
        max_gt_iou=_number(frame_data, "max_gt_iou", "frame", 0.25),
    )

    count_data = _section(data, "objects_per_frame")
    objects_per_frame = _build(
        "objects_per_frame",
        ObjectCountSpec,
        kind=str(count_data.get("kind", "fixed")),
        value=_number(count_data, "value", "objects_per_frame"),
    )

    crop_data = _section(data, "crop_size")
    crop_size = _build(
        "crop_size",
        CropSizeSpec,
        kind=str(crop_data.get("kind", "uniform-side")),
        side_lo=_number(crop_data, "side_lo", "crop_size"),
        side_hi=_number(crop_data, "side_hi", "crop_size"),
        scale=_number(crop_data, "scale", "crop_size", 1.0),
    )

    catalog = _resolve_catalog(_require(data, "catalog"))

    confusion_data = _section(data, "confusion")
    edge_cm = _resolve_confusion(_require(confusion_data, "edge", "confusion"), "confusion.edge")
    cloud_cm = _resolve_confusion(
        _require(confusion_data, "cloud", "confusion"), "confusion.cloud"
    )

    difficulty = _resolve_difficulty(_require(data, "difficulty"))
    localizer = _build("localizer", LocalizerModel.from_dict, _section(data, "localizer"))

    routing_data = _section(data, "routing")
    tau = _number(routing_data, "tau", "routing", 0.5)
    if not 0.0 <= tau <= 1.0:
        raise ValidationError("routing.tau", f"must be in [0, 1], got {tau}")
    nms_iou = _number(routing_data, "nms_iou", "routing", 0.5)
    if not 0.0 < nms_iou <= 1.0:
        raise ValidationError("routing.nms_iou", f"must be in (0, 1], got {nms_iou}")
    mode = str(routing_data.get("mode", "collaborative"))
    routing = _build("routing.mode", RoutingPolicy, tau=tau, nms_iou=nms_iou, mode=mode)

    platforms_data = _section(data, "platforms")
    edge_platform = _resolve_platform(
        _require(platforms_data, "edge", "platforms"), "platforms.edge"
    )
    cloud_platform = _resolve_platform(
        _require(platforms_data, "cloud", "platforms"), "platforms.cloud"
    )

    channel = _build("channel", ChannelProfile.from_dict, _section(data, "channel"))

    return _build(
        "config",
        ScenarioConfig,
        seed=seed,
        frame_count=frame_count,
        frame=frame,
        objects_per_frame=objects_per_frame,
        crop_size=crop_size,
        catalog=catalog,
        edge_cm=edge_cm,
        cloud_cm=cloud_cm,
        difficulty=difficulty,
        localizer=localizer,
        routing=routing,
        edge_platform=edge_platform,
        cloud_platform=cloud_platform,
        channel=channel,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return load_config_dict(data)


def load_preset(name: str) -> ScenarioConfig:
    """Load one of the bundled scenario presets by name."""
    return load_config_dict(presets.scenario_raw(name))
