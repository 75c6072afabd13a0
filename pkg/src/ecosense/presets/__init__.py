"""Bundled preset registry: platforms, catalogs, confusion matrices, models.

Platform rows are the published per-device measurements. Confusion-matrix
cells are approximate by construction: only the per-class accuracy counts
stated for each dataset (how many classes exceed 95%) are contractual; the
remaining probability mass is spread uniformly off the diagonal.
"""

from __future__ import annotations

import functools
import json
from importlib.resources import files
from typing import Any

from ..domain import ClassCatalog, PlatformProfile
from ..oracles import ConfusionMatrix, DifficultyModel

__all__ = [
    "UnknownPresetError",
    "platform",
    "platform_names",
    "platforms",
    "catalog",
    "catalog_names",
    "confusion_matrix",
    "confusion_matrix_names",
    "difficulty_model",
    "difficulty_model_names",
    "scenario_names",
    "scenario_raw",
]

_SCENARIO_PRESETS = (
    "seaships-default",
    "smd-plus-default",
    "seaships-calibrated",
    "smd-plus-calibrated",
)


class UnknownPresetError(KeyError):
    """Requested preset name is not bundled."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return self.args[0] if self.args else ""


@functools.cache
def _load_json(name: str) -> Any:
    return json.loads(files("ecosense.presets").joinpath(name).read_text(encoding="utf-8"))


def _lookup(kind: str, table: dict[str, Any], name: str) -> Any:
    try:
        return table[name]
    except KeyError:
        known = ", ".join(sorted(table))
        raise UnknownPresetError(f"unknown {kind} preset {name!r}; bundled: {known}") from None


def platforms() -> list[PlatformProfile]:
    """All bundled platform measurements, edge rows first."""
    return [PlatformProfile.from_dict(row) for row in _load_json("platforms.json")]


def platform_names() -> list[str]:
    return [row["name"] for row in _load_json("platforms.json")]


def platform(name: str) -> PlatformProfile:
    table = {row["name"]: row for row in _load_json("platforms.json")}
    return PlatformProfile.from_dict(_lookup("platform", table, name))


def catalog_names() -> list[str]:
    return sorted(_load_json("catalogs.json"))


def catalog(name: str) -> ClassCatalog:
    names = _lookup("catalog", _load_json("catalogs.json"), name)
    return ClassCatalog(names=tuple(names))


def confusion_matrix_names() -> list[str]:
    return sorted(_load_json("confusion.json"))


def confusion_matrix(name: str) -> ConfusionMatrix:
    data = _lookup("confusion matrix", _load_json("confusion.json"), name)
    return ConfusionMatrix.from_dict(data)


def difficulty_model_names() -> list[str]:
    return sorted(_load_json("difficulty.json"))


def difficulty_model(name: str) -> DifficultyModel:
    data = _lookup("difficulty model", _load_json("difficulty.json"), name)
    return DifficultyModel.from_dict(data)


def scenario_names() -> list[str]:
    return [name for name in _SCENARIO_PRESETS if _scenario_exists(name)]


def _scenario_exists(name: str) -> bool:
    return files("ecosense.presets").joinpath(f"{name}.json").is_file()


def scenario_raw(name: str) -> dict[str, Any]:
    """Raw JSON document of a bundled scenario preset."""
    if not _scenario_exists(name):
        known = ", ".join(scenario_names())
        raise UnknownPresetError(f"unknown scenario preset {name!r}; bundled: {known}")
    return _load_json(f"{name}.json")
