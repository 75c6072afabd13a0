"""Calibrated stochastic stand-ins for the learned components.

The localizer, the two classifiers, and the difficulty estimator are modeled
by small probabilistic contracts instead of neural networks. All randomness
flows through :class:`SeededRng` (PCG64 seeded via ``SeedSequence`` spawn
keys), so every run is bit-reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .domain import (
    BadClassIndexError,
    BoundingBox,
    Frame,
    Proposal,
    crop_bytes_for,
)

__all__ = [
    "SeededRng",
    "ConfusionMatrix",
    "DifficultyModel",
    "LocalizerModel",
    "assign_difficulty",
    "estimate_difficulty",
    "classify",
    "localize",
    "score_tail_probability",
    "SCORE_SHAPE_A",
    "SCORE_SHAPE_B",
]

# Shape of the Beta distribution used for difficulty scores in each half
# interval. Fixed so arbitrary thresholds stay analytically tractable.
SCORE_SHAPE_A = 2.0
SCORE_SHAPE_B = 2.0

_ROW_SUM_TOL = 1e-9
_JUST_BELOW_ONE = math.nextafter(1.0, 0.0)
_JUST_BELOW_HALF = math.nextafter(0.5, 0.0)


class SeededRng:
    """Deterministic random stream: PCG64 keyed by (seed, spawn_key).

    Identical seed and spawn key reproduce the identical stream. Substreams
    extend the spawn key, so independent parts of a simulation can draw
    without perturbing each other.
    """

    __slots__ = ("_seed", "_spawn_key", "_gen")

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()) -> None:
        self._seed = int(seed)
        self._spawn_key = tuple(int(k) for k in spawn_key)
        seq = np.random.SeedSequence(self._seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def spawn_key(self) -> tuple[int, ...]:
        return self._spawn_key

    def substream(self, *key: int) -> "SeededRng":
        """Fresh stream derived from this seed with an extended spawn key."""
        return SeededRng(self._seed, self._spawn_key + key)

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def beta(self, a: float, b: float) -> float:
        return float(self._gen.beta(a, b))

    def poisson(self, lam: float) -> int:
        if lam <= 0:
            return 0
        return int(self._gen.poisson(lam))

    def normals(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    def categorical(self, probs: np.ndarray) -> int:
        """Sample an index from a probability vector with a single uniform."""
        cumulative = np.cumsum(probs)
        idx = int(np.searchsorted(cumulative, self.uniform() * cumulative[-1], side="right"))
        return min(idx, len(probs) - 1)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Row-stochastic matrix: row i is the prediction distribution for class i."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.matrix, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("confusion matrix needs at least 2 classes")
        if not np.all(np.isfinite(arr)):
            raise ValueError("confusion matrix must be finite")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("confusion matrix entries must lie in [0, 1]")
        row_sums = arr.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > _ROW_SUM_TOL):
            worst = float(np.max(np.abs(row_sums - 1.0)))
            raise ValueError(f"rows must sum to 1 within {_ROW_SUM_TOL}, off by {worst}")
        object.__setattr__(self, "matrix", arr)

    @property
    def num_classes(self) -> int:
        return self.matrix.shape[0]

    def row(self, true_class: int) -> np.ndarray:
        if not 0 <= true_class < self.num_classes:
            raise BadClassIndexError(
                f"class {true_class} outside matrix with {self.num_classes} classes"
            )
        return self.matrix[true_class]

    def error_profile(self, true_class: int) -> np.ndarray:
        """Prediction distribution conditioned on being wrong.

        The diagonal entry is zeroed and the rest renormalized; if the row
        has no off-diagonal mass the errors spread uniformly.
        """
        row = self.row(true_class).copy()
        row[true_class] = 0.0
        mass = row.sum()
        if mass <= 0.0:
            row[:] = 1.0 / (self.num_classes - 1)
            row[true_class] = 0.0
            return row
        return row / mass

    @classmethod
    def identity(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.eye(num_classes))

    @classmethod
    def from_diagonal(cls, diagonal: Sequence[float]) -> "ConfusionMatrix":
        """Matrix with the given per-class accuracy and uniform off-diagonal mass."""
        diag = np.asarray(diagonal, dtype=np.float64)
        n = diag.shape[0]
        if n < 2:
            raise ValueError("need at least 2 classes")
        matrix = np.empty((n, n))
        for i in range(n):
            off = (1.0 - diag[i]) / (n - 1)
            matrix[i, :] = off
            matrix[i, i] = diag[i]
        return cls(matrix)

    def to_dict(self) -> dict[str, Any]:
        return {"matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ConfusionMatrix":
        if "matrix" in data:
            return cls(np.asarray(data["matrix"], dtype=np.float64))
        if "diagonal" in data:
            return cls.from_diagonal(data["diagonal"])
        raise ValueError("confusion matrix needs a 'matrix' or 'diagonal' key")


@dataclass(frozen=True)
class DifficultyModel:
    """Hardness prior, conditional edge accuracy, and estimator operating point.

    A proposal is hard with probability ``p_hard``. The edge classifier hits
    the true class with probability ``p_edge_correct_hard`` on hard samples
    and ``p_edge_correct_easy`` on easy ones; the default presets pin
    ``p_edge_correct_hard`` to 0 so hard means exactly edge-misclassified.
    The estimator flags hard samples with probability ``tpr`` and easy ones
    with probability ``fpr``.
    """

    p_hard: float
    p_edge_correct_easy: float
    p_edge_correct_hard: float = 0.0
    tpr: float = 0.95
    fpr: float = 0.05

    def __post_init__(self) -> None:
        for name in ("p_hard", "p_edge_correct_easy", "p_edge_correct_hard", "tpr", "fpr"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value!r}")

    def flag_probability(self, is_hard: bool) -> float:
        return self.tpr if is_hard else self.fpr

    def to_dict(self) -> dict[str, Any]:
        return {
            "p_hard": self.p_hard,
            "p_edge_correct_easy": self.p_edge_correct_easy,
            "p_edge_correct_hard": self.p_edge_correct_hard,
            "tpr": self.tpr,
            "fpr": self.fpr,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DifficultyModel":
        return cls(
            p_hard=float(data["p_hard"]),
            p_edge_correct_easy=float(data["p_edge_correct_easy"]),
            p_edge_correct_hard=float(data.get("p_edge_correct_hard", 0.0)),
            tpr=float(data.get("tpr", 0.95)),
            fpr=float(data.get("fpr", 0.05)),
        )


@dataclass(frozen=True)
class LocalizerModel:
    """Statistical behavior of the detector feeding the pipeline.

    Each ground-truth object independently yields a proposal with probability
    ``recall``, jittered by ``jitter_px`` per coordinate, plus a Poisson
    number of overlapping duplicates at lower objectness. ``bytes_per_pixel``
    prices the crop a proposal would ship.
    """

    recall: float = 1.0
    duplicate_rate: float = 0.0
    jitter_px: float = 0.0
    bytes_per_pixel: float = 3.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.recall <= 1.0:
            raise ValueError(f"recall must be in [0, 1], got {self.recall!r}")
        if self.duplicate_rate < 0:
            raise ValueError(f"duplicate_rate must be >= 0, got {self.duplicate_rate!r}")
        if self.jitter_px < 0:
            raise ValueError(f"jitter_px must be >= 0, got {self.jitter_px!r}")
        if self.bytes_per_pixel <= 0:
            raise ValueError(f"bytes_per_pixel must be > 0, got {self.bytes_per_pixel!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "recall": self.recall,
            "duplicate_rate": self.duplicate_rate,
            "jitter_px": self.jitter_px,
            "bytes_per_pixel": self.bytes_per_pixel,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LocalizerModel":
        return cls(
            recall=float(data.get("recall", 1.0)),
            duplicate_rate=float(data.get("duplicate_rate", 0.0)),
            jitter_px=float(data.get("jitter_px", 0.0)),
            bytes_per_pixel=float(data.get("bytes_per_pixel", 3.0)),
        )


def assign_difficulty(
    proposal: Proposal, m: DifficultyModel, rng: SeededRng
) -> tuple[bool, bool]:
    """Draw (is_hard, edge_would_be_correct) for one proposal.

    Hardness follows the prior; edge correctness is conditioned on it. With
    ``p_edge_correct_hard = 0`` every hard proposal would be misclassified
    at the edge, which is exactly how hard labels are defined.
    """
    is_hard = rng.bernoulli(m.p_hard)
    p_correct = m.p_edge_correct_hard if is_hard else m.p_edge_correct_easy
    edge_would_be_correct = rng.bernoulli(p_correct)
    return is_hard, edge_would_be_correct


def estimate_difficulty(is_hard: bool, m: DifficultyModel, rng: SeededRng) -> float:
    """Continuous difficulty score in [0, 1).

    A flag is drawn first (probability ``tpr`` for hard samples, ``fpr`` for
    easy ones), then the score comes from a Beta(2, 2) shape squeezed into
    [0.5, 1) when flagged and [0, 0.5) otherwise. Thresholding at 0.5 hence
    reproduces the configured flag rates exactly, while other thresholds
    remain meaningful.
    """
    flagged = rng.bernoulli(m.flag_probability(is_hard))
    b = rng.beta(SCORE_SHAPE_A, SCORE_SHAPE_B)
    if flagged:
        return min(0.5 + 0.5 * b, _JUST_BELOW_ONE)
    return min(0.5 * b, _JUST_BELOW_HALF)


def _beta22_cdf(x: float) -> float:
    # Beta(2, 2) CDF on [0, 1]: 3x^2 - 2x^3.
    x = min(max(x, 0.0), 1.0)
    return x * x * (3.0 - 2.0 * x)


def score_tail_probability(m: DifficultyModel, is_hard: bool, tau: float) -> float:
    """P(score >= tau) for a proposal of the given hardness, in closed form.

    Used by the calibration solver; matches :func:`estimate_difficulty` by
    construction of the two half-interval Beta shapes.
    """
    if tau <= 0.0:
        return 1.0
    p_flag = m.flag_probability(is_hard)
    tail_flagged = 1.0 - _beta22_cdf(2.0 * tau - 1.0)
    tail_unflagged = 1.0 - _beta22_cdf(2.0 * tau)
    return p_flag * tail_flagged + (1.0 - p_flag) * tail_unflagged


def classify(true_class: int, cm: ConfusionMatrix, rng: SeededRng) -> int:
    """Sample a predicted class from the confusion-matrix row of the truth."""
    return rng.categorical(cm.row(true_class))


def _jitter_box(
    box: BoundingBox, scale: float, width: int, height: int, rng: SeededRng
) -> BoundingBox:
    if scale <= 0:
        return box
    d = rng.normals(4) * scale
    x0 = min(max(box.x_min + d[0], 0.0), width - 1.0)
    y0 = min(max(box.y_min + d[1], 0.0), height - 1.0)
    x1 = min(max(box.x_max + d[2], x0 + 1.0), float(width))
    y1 = min(max(box.y_max + d[3], y0 + 1.0), float(height))
    return BoundingBox(x0, y0, x1, y1)


# Objectness bands keep primaries strictly above their duplicates so NMS
# deterministically prefers the primary detection.
_PRIMARY_OBJECTNESS = (0.75, 1.0)
_DUPLICATE_OBJECTNESS = (0.25, 0.75)


def localize(frame: Frame, m: LocalizerModel, rng: SeededRng) -> list[Proposal]:
    """Turn ground-truth objects into detector proposals.

    Detection order follows the frame's object order, so output is
    deterministic given the stream. Duplicates overlap their primary and
    carry strictly lower objectness.
    """
    proposals: list[Proposal] = []
    for obj in frame.objects:
        if not rng.bernoulli(m.recall):
            continue
        box = _jitter_box(obj.box, m.jitter_px, frame.width, frame.height, rng)
        p_lo, p_hi = _PRIMARY_OBJECTNESS
        proposals.append(
            Proposal(
                box=box,
                objectness=p_lo + (p_hi - p_lo) * rng.uniform(),
                true_class=obj.true_class,
                crop_bytes=crop_bytes_for(box, m.bytes_per_pixel),
            )
        )
        duplicate_scale = max(m.jitter_px, 0.02 * min(box.width, box.height))
        d_lo, d_hi = _DUPLICATE_OBJECTNESS
        for _ in range(rng.poisson(m.duplicate_rate)):
            dup_box = _jitter_box(box, duplicate_scale, frame.width, frame.height, rng)
            proposals.append(
                Proposal(
                    box=dup_box,
                    objectness=d_lo + (d_hi - d_lo) * rng.uniform(),
                    true_class=obj.true_class,
                    crop_bytes=crop_bytes_for(dup_box, m.bytes_per_pixel),
                )
            )
    return proposals
