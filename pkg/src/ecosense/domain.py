"""Core value types shared across the simulator.

Everything in this module is an immutable value. Construction validates the
per-field invariants; cross-entity checks (box containment in a frame, class
indices against a catalog) live in :func:`validate_frame` so that invalid
input data can be represented and then rejected with a precise error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

__all__ = [
    "DomainError",
    "DegenerateBoxError",
    "OutOfBoundsBoxError",
    "BadClassIndexError",
    "BoundingBox",
    "Proposal",
    "Frame",
    "ClassCatalog",
    "PlatformProfile",
    "ChannelProfile",
    "crop_bytes_for",
    "validate_frame",
]


class DomainError(ValueError):
    """Base class for domain validation failures."""


class DegenerateBoxError(DomainError):
    """Box with non-positive extent or invalid coordinates."""


class OutOfBoundsBoxError(DomainError):
    """Object box exceeds the frame it belongs to."""


class BadClassIndexError(DomainError):
    """Class index outside the catalog range."""


def _require_finite(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous frame coordinates, corner form."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DegenerateBoxError(f"{name} must be finite and >= 0, got {value!r}")
        if self.x_min >= self.x_max:
            raise DegenerateBoxError(f"x_min must be < x_max, got {self.x_min} >= {self.x_max}")
        if self.y_min >= self.y_max:
            raise DegenerateBoxError(f"y_min must be < y_max, got {self.y_min} >= {self.y_max}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def to_dict(self) -> dict[str, float]:
        return {
            "x_min": float(self.x_min),
            "y_min": float(self.y_min),
            "x_max": float(self.x_max),
            "y_max": float(self.y_max),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BoundingBox":
        return cls(
            x_min=float(data["x_min"]),
            y_min=float(data["y_min"]),
            x_max=float(data["x_max"]),
            y_max=float(data["y_max"]),
        )


def crop_bytes_for(box: BoundingBox, bytes_per_pixel: float = 3.0) -> int:
    """Bytes needed to transmit an uncompressed crop of ``box``.

    The crop is modeled as the box area times a configurable per-pixel cost,
    rounded up to whole bytes. Monotone in box area.
    """
    if bytes_per_pixel <= 0:
        raise DomainError(f"bytes_per_pixel must be > 0, got {bytes_per_pixel!r}")
    return math.ceil(box.area * bytes_per_pixel)


@dataclass(frozen=True)
class Proposal:
    """One detected (or ground-truth) object: the unit of routing."""

    box: BoundingBox
    objectness: float
    true_class: int
    crop_bytes: int

    def __post_init__(self) -> None:
        _require_finite(self.objectness, "objectness")
        if not 0.0 <= self.objectness <= 1.0:
            raise DomainError(f"objectness must be in [0, 1], got {self.objectness!r}")
        if self.true_class < 0:
            raise BadClassIndexError(f"true_class must be >= 0, got {self.true_class!r}")
        if self.crop_bytes <= 0:
            raise DomainError(f"crop_bytes must be > 0, got {self.crop_bytes!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "box": self.box.to_dict(),
            "objectness": float(self.objectness),
            "true_class": int(self.true_class),
            "crop_bytes": int(self.crop_bytes),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Proposal":
        return cls(
            box=BoundingBox.from_dict(data["box"]),
            objectness=float(data["objectness"]),
            true_class=int(data["true_class"]),
            crop_bytes=int(data["crop_bytes"]),
        )


@dataclass(frozen=True)
class Frame:
    """One sensor frame: geometry, encoded size, and ground-truth objects.

    Only scalar invariants are enforced here. Whether the objects actually
    fit inside the frame (and reference valid classes) is checked by
    :func:`validate_frame`, which needs the catalog.
    """

    frame_id: int
    width: int
    height: int
    bytes: int
    objects: tuple[Proposal, ...]

    def __post_init__(self) -> None:
        if self.frame_id < 0:
            raise DomainError(f"frame_id must be >= 0, got {self.frame_id!r}")
        if self.width <= 0 or self.height <= 0:
            raise DomainError(f"frame must have positive size, got {self.width}x{self.height}")
        if self.bytes <= 0:
            raise DomainError(f"frame bytes must be > 0, got {self.bytes!r}")
        object.__setattr__(self, "objects", tuple(self.objects))

    def to_dict(self) -> dict[str, Any]:
        return {
            "frame_id": int(self.frame_id),
            "width": int(self.width),
            "height": int(self.height),
            "bytes": int(self.bytes),
            "objects": [obj.to_dict() for obj in self.objects],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Frame":
        return cls(
            frame_id=int(data["frame_id"]),
            width=int(data["width"]),
            height=int(data["height"]),
            bytes=int(data["bytes"]),
            objects=tuple(Proposal.from_dict(obj) for obj in data["objects"]),
        )


@dataclass(frozen=True)
class ClassCatalog:
    """Ordered category labels; class indices refer to positions here."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 2:
            raise DomainError(f"catalog needs at least 2 classes, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise DomainError("catalog names must be unique")

    @property
    def num_classes(self) -> int:
        return len(self.names)

    def to_dict(self) -> dict[str, Any]:
        return {"names": list(self.names)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClassCatalog":
        return cls(names=tuple(str(n) for n in data["names"]))


@dataclass(frozen=True)
class PlatformProfile:
    """Measured per-inference latency and power of one compute platform."""

    name: str
    latency_ms: float
    power_w: float
    role: str

    def __post_init__(self) -> None:
        if self.latency_ms <= 0:
            raise DomainError(f"latency_ms must be > 0, got {self.latency_ms!r}")
        if self.power_w <= 0:
            raise DomainError(f"power_w must be > 0, got {self.power_w!r}")
        if self.role not in ("edge", "cloud"):
            raise DomainError(f"role must be 'edge' or 'cloud', got {self.role!r}")

    @property
    def energy_per_inference_j(self) -> float:
        """Joules consumed by one inference: power times latency."""
        return self.power_w * self.latency_ms / 1000.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "latency_ms": float(self.latency_ms),
            "power_w": float(self.power_w),
            "role": self.role,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PlatformProfile":
        return cls(
            name=str(data["name"]),
            latency_ms=float(data["latency_ms"]),
            power_w=float(data["power_w"]),
            role=str(data["role"]),
        )


@dataclass(frozen=True)
class ChannelProfile:
    """Uplink model: throughput, per-byte energy, and result envelope size."""

    bytes_per_second: float
    joules_per_byte: float
    result_metadata_bytes: int

    def __post_init__(self) -> None:
        if self.bytes_per_second <= 0:
            raise DomainError(f"bytes_per_second must be > 0, got {self.bytes_per_second!r}")
        if self.joules_per_byte <= 0:
            raise DomainError(f"joules_per_byte must be > 0, got {self.joules_per_byte!r}")
        if self.result_metadata_bytes <= 0:
            raise DomainError(
                f"result_metadata_bytes must be > 0, got {self.result_metadata_bytes!r}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "bytes_per_second": float(self.bytes_per_second),
            "joules_per_byte": float(self.joules_per_byte),
            "result_metadata_bytes": int(self.result_metadata_bytes),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ChannelProfile":
        return cls(
            bytes_per_second=float(data["bytes_per_second"]),
            joules_per_byte=float(data["joules_per_byte"]),
            result_metadata_bytes=int(data["result_metadata_bytes"]),
        )


def validate_frame(frame: Frame, catalog: ClassCatalog) -> None:
    """Check that every object fits the frame and references a valid class.

    Raises :class:`OutOfBoundsBoxError` or :class:`BadClassIndexError` on the
    first violation; returns ``None`` when the frame is consistent. Degenerate
    boxes cannot be constructed, so they are rejected before this runs.
    """
    for index, obj in enumerate(frame.objects):
        box = obj.box
        if box.x_max > frame.width or box.y_max > frame.height:
            raise OutOfBoundsBoxError(
                f"object {index} box ({box.x_min}, {box.y_min}, {box.x_max}, {box.y_max}) "
                f"exceeds frame {frame.width}x{frame.height}"
            )
        if obj.true_class >= catalog.num_classes:
            raise BadClassIndexError(
                f"object {index} has class {obj.true_class}, catalog has "
                f"{catalog.num_classes} classes"
            )
