"""Small dense-tensor math: geometry, attention, losses, and schedules.

Every operation is a pure function evaluated forward-only at desk scale.
There is no autograd and no batching; shapes are tiny and explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import BoundingBox, Proposal

__all__ = [
    "ShapeMismatchError",
    "DegenerateNormalizerError",
    "NotAProbabilityVectorError",
    "KTooLargeError",
    "DegenerateScheduleError",
    "BadBlockIndexError",
    "Tensor3",
    "EmbeddingMap",
    "ScoreMap",
    "EmbeddingPartition",
    "BsHyperParams",
    "RefinementSchedule",
    "LocalizerLossParts",
    "AttentionDescriptors",
    "ExcitationWeights",
    "iou",
    "nms",
    "global_avg_pool",
    "coordinate_pool",
    "excite",
    "attention_normalize",
    "apply_attention",
    "score_map",
    "column_scores",
    "topk_partition",
    "cross_entropy_loss",
    "suppression_loss",
    "bs_loss",
    "temperature_at_epoch",
    "refinement_loss",
    "backend_total_loss",
    "localizer_loss",
    "objectness_loss",
    "box_regression_loss",
    "k_schedule",
    "K_VALUES",
]

LOG_EPSILON = 1e-12

# Per-block embedding selection counts, largest first.
K_VALUES = (256, 128, 64, 32)


class ShapeMismatchError(ValueError):
    pass


class DegenerateNormalizerError(ValueError):
    pass


class NotAProbabilityVectorError(ValueError):
    pass


class KTooLargeError(ValueError):
    pass


class DegenerateScheduleError(ValueError):
    pass


class BadBlockIndexError(ValueError):
    pass


def _as_float_array(values: Sequence[float] | np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Dense (channels, height, width) array of finite reals."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_float_array(self.data, "Tensor3 data")
        if arr.ndim != 3:
            raise ShapeMismatchError(f"Tensor3 needs 3 dims, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        c, h, w = self.data.shape
        return (c, h, w)


@dataclass(frozen=True, eq=False)
class EmbeddingMap:
    """Per-category embeddings: one row per class, one column per location."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_float_array(self.data, "EmbeddingMap data")
        if arr.ndim != 2:
            raise ShapeMismatchError(f"EmbeddingMap needs 2 dims, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError(f"EmbeddingMap needs >= 2 category rows, got {arr.shape[0]}")
        if arr.shape[1] < 1:
            raise ValueError("EmbeddingMap needs >= 1 column")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


COLUMN_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Column-normalized probabilities over categories, same shape as its map."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_float_array(self.data, "ScoreMap data")
        if arr.ndim != 2:
            raise ShapeMismatchError(f"ScoreMap needs 2 dims, got shape {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("ScoreMap values must lie in [0, 1]")
        sums = arr.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > COLUMN_SUM_TOL):
            worst = float(np.max(np.abs(sums - 1.0)))
            raise ValueError(f"ScoreMap columns must sum to 1 within {COLUMN_SUM_TOL}, off by {worst}")
        object.__setattr__(self, "data", arr)


@dataclass(frozen=True, eq=False)
class EmbeddingPartition:
    """Columns split into a kept foreground set and a dropped background set."""

    selected_indices: tuple[int, ...]
    dropped_indices: tuple[int, ...]
    selected: np.ndarray
    dropped: np.ndarray
    k: int

    def __post_init__(self) -> None:
        if len(self.selected_indices) != self.k:
            raise ValueError(f"expected {self.k} selected columns, got {len(self.selected_indices)}")
        all_indices = set(self.selected_indices) | set(self.dropped_indices)
        total = len(self.selected_indices) + len(self.dropped_indices)
        if len(all_indices) != total or all_indices != set(range(total)):
            raise ValueError("selected and dropped indices must partition the column set")

    @property
    def merged(self) -> np.ndarray:
        """All selected columns concatenated, in selection order."""
        return self.selected


@dataclass(frozen=True)
class BsHyperParams:
    """Weights for the classification and suppression terms."""

    lambda_e: float = 1.0
    lambda_d: float = 1.0

    def __post_init__(self) -> None:
        if self.lambda_e < 0 or self.lambda_d < 0:
            raise ValueError("loss weights must be >= 0")


@dataclass(frozen=True)
class RefinementSchedule:
    """Temperature decay state: initial temperature plus an epoch index."""

    initial_temperature: float
    epoch: int

    def __post_init__(self) -> None:
        if not self.initial_temperature > 0:
            raise ValueError(f"initial_temperature must be > 0, got {self.initial_temperature!r}")
        if self.epoch < 0:
            raise ValueError(f"epoch must be >= 0, got {self.epoch!r}")


@dataclass(frozen=True)
class LocalizerLossParts:
    """Objectness and box-regression components of the localizer loss."""

    l_obj: float
    l_reg: float

    def __post_init__(self) -> None:
        for name in ("l_obj", "l_reg"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True, eq=False)
class AttentionDescriptors:
    """Per-axis 1D attention vectors for channels, rows, and columns."""

    channel: np.ndarray
    height: np.ndarray
    width: np.ndarray

    def __post_init__(self) -> None:
        for name in ("channel", "height", "width"):
            arr = _as_float_array(getattr(self, name), f"{name} descriptor")
            if arr.ndim != 1:
                raise ShapeMismatchError(f"{name} descriptor must be 1-D, got shape {arr.shape}")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class ExcitationWeights:
    """Two dense affine layers: input -> hidden (ReLU) -> output (sigmoid)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        w1 = _as_float_array(self.w1, "w1")
        b1 = _as_float_array(self.b1, "b1")
        w2 = _as_float_array(self.w2, "w2")
        b2 = _as_float_array(self.b2, "b2")
        if w1.ndim != 2 or w2.ndim != 2 or b1.ndim != 1 or b2.ndim != 1:
            raise ShapeMismatchError("weights must be 2-D, biases 1-D")
        if w1.shape[0] != b1.shape[0]:
            raise ShapeMismatchError(f"b1 length {b1.shape[0]} != hidden width {w1.shape[0]}")
        if w2.shape[1] != w1.shape[0]:
            raise ShapeMismatchError(f"w2 expects {w2.shape[1]} hidden inputs, layer 1 outputs {w1.shape[0]}")
        if w2.shape[0] != b2.shape[0]:
            raise ShapeMismatchError(f"b2 length {b2.shape[0]} != output width {w2.shape[0]}")
        for name, arr in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            object.__setattr__(self, name, arr)

    @property
    def input_width(self) -> int:
        return self.w1.shape[1]

    @property
    def output_width(self) -> int:
        return self.w2.shape[0]


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint, 1 when identical."""
    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    if inter_w <= 0:
        return 0.0
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if inter_h <= 0:
        return 0.0
    inter = inter_w * inter_h
    union = a.area + b.area - inter
    return inter / union


def nms(proposals: Sequence[Proposal], iou_threshold: float) -> list[Proposal]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the highest-objectness remaining proposal and discards
    every remaining proposal overlapping it with IoU strictly above the
    threshold. Ties in objectness break toward the lower input index, so the
    result is deterministic. Output is sorted by descending objectness.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold!r}")
    order = sorted(range(len(proposals)), key=lambda i: (-proposals[i].objectness, i))
    kept: list[int] = []
    for i in order:
        box = proposals[i].box
        if all(iou(box, proposals[j].box) <= iou_threshold for j in kept):
            kept.append(i)
    return [proposals[i] for i in kept]


def global_avg_pool(x: Tensor3) -> np.ndarray:
    """Mean over the spatial plane, one value per channel."""
    return x.data.mean(axis=(1, 2))


def coordinate_pool(x: Tensor3) -> tuple[np.ndarray, np.ndarray]:
    """Directional means: one value per row and one per column.

    Returns ``(height_vector, width_vector)`` where ``height_vector[h]``
    averages over channels and columns at row ``h``, and ``width_vector[w]``
    averages over channels and rows at column ``w``.
    """
    return x.data.mean(axis=(0, 2)), x.data.mean(axis=(0, 1))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def excite(v: Sequence[float] | np.ndarray, weights: ExcitationWeights) -> np.ndarray:
    """Two fully connected layers with a final sigmoid.

    The hidden layer uses ReLU; the output therefore lies strictly in (0, 1)
    and has the same length as the input.
    """
    vec = _as_float_array(v, "excite input")
    if vec.ndim != 1:
        raise ShapeMismatchError(f"excite input must be 1-D, got shape {vec.shape}")
    if weights.input_width != vec.shape[0]:
        raise ShapeMismatchError(
            f"layer 1 expects {weights.input_width} inputs, got {vec.shape[0]}"
        )
    if weights.output_width != vec.shape[0]:
        raise ShapeMismatchError(
            f"layer 2 outputs {weights.output_width} values, expected {vec.shape[0]}"
        )
    hidden = np.maximum(weights.w1 @ vec + weights.b1, 0.0)
    return _sigmoid(weights.w2 @ hidden + weights.b2)


def attention_normalize(d: AttentionDescriptors, dims: tuple[int, int, int]) -> Tensor3:
    """Combine per-axis descriptors into a weight tensor that sums to one.

    The raw weight at (c, h, w) is the product of the three descriptor
    entries; the tensor is then divided by its total so the entries form a
    distribution over all positions.
    """
    c, h, w = dims
    if d.channel.shape[0] != c or d.height.shape[0] != h or d.width.shape[0] != w:
        raise ShapeMismatchError(
            f"descriptor lengths ({d.channel.shape[0]}, {d.height.shape[0]}, "
            f"{d.width.shape[0]}) do not match dims {dims}"
        )
    raw = d.channel[:, None, None] * d.height[None, :, None] * d.width[None, None, :]
    total = float(raw.sum())
    if total == 0.0:
        raise DegenerateNormalizerError("descriptor product sums to zero; cannot normalize")
    return Tensor3(raw / total)


def apply_attention(x: Tensor3, w_hat: Tensor3) -> Tensor3:
    """Element-wise product of a feature tensor and an attention tensor."""
    if x.dims != w_hat.dims:
        raise ShapeMismatchError(f"dims {x.dims} != {w_hat.dims}")
    return Tensor3(x.data * w_hat.data)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    return shifted - math.log(np.exp(shifted).sum())


def score_map(y: EmbeddingMap) -> ScoreMap:
    """Column-wise softmax over the category axis, stabilized by max shift."""
    shifted = y.data - y.data.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    return ScoreMap(exp / exp.sum(axis=0, keepdims=True))


def column_scores(p: ScoreMap) -> np.ndarray:
    """Scalar score per column: the maximum category probability."""
    return p.data.max(axis=0)


def topk_partition(
    scores: Sequence[float] | np.ndarray, embeddings: EmbeddingMap, k: int
) -> EmbeddingPartition:
    """Split columns into the k best-scoring (kept) and the rest (dropped).

    Ties break toward the lower column index. Selected columns are returned
    in descending score order, dropped columns in ascending index order.
    """
    score_arr = _as_float_array(scores, "column scores")
    if score_arr.ndim != 1 or score_arr.shape[0] != embeddings.cols:
        raise ShapeMismatchError(
            f"need one score per column ({embeddings.cols}), got shape {score_arr.shape}"
        )
    if k <= 0:
        raise ValueError(f"k must be > 0, got {k!r}")
    if k > embeddings.cols:
        raise KTooLargeError(f"k={k} exceeds {embeddings.cols} columns")
    order = sorted(range(embeddings.cols), key=lambda j: (-score_arr[j], j))
    selected_idx = tuple(order[:k])
    dropped_idx = tuple(sorted(order[k:]))
    return EmbeddingPartition(
        selected_indices=selected_idx,
        dropped_indices=dropped_idx,
        selected=embeddings.data[:, list(selected_idx)],
        dropped=embeddings.data[:, list(dropped_idx)],
        k=k,
    )


def cross_entropy_loss(
    y_true: Sequence[float] | np.ndarray, p: Sequence[float] | np.ndarray
) -> float:
    """Cross entropy between a target distribution and a prediction.

    ``p`` must be a probability vector (entries >= 0, summing to 1 within
    1e-6); logs are guarded with a 1e-12 floor.
    """
    target = _as_float_array(y_true, "y_true")
    probs = _as_float_array(p, "p")
    if target.shape != probs.shape or target.ndim != 1:
        raise ShapeMismatchError(f"shape mismatch: {target.shape} vs {probs.shape}")
    if np.any(probs < 0.0):
        raise NotAProbabilityVectorError("prediction has negative entries")
    if abs(float(probs.sum()) - 1.0) > 1e-6:
        raise NotAProbabilityVectorError(f"prediction sums to {float(probs.sum())}, not 1")
    return float(-(target * np.log(np.maximum(probs, LOG_EPSILON))).sum())


def suppression_loss(y_d: Sequence[float] | np.ndarray, reduction: str = "sum") -> float:
    """Push dropped embeddings toward a pseudo label of -1.

    Each value contributes ``(tanh(y) + 1)^2``; contributions are summed by
    default, with a mean reduction available. Empty input yields 0.
    """
    if reduction not in ("sum", "mean"):
        raise ValueError(f"reduction must be 'sum' or 'mean', got {reduction!r}")
    values = _as_float_array(y_d, "dropped values")
    if values.size == 0:
        return 0.0
    per_value = (np.tanh(values) + 1.0) ** 2
    return float(per_value.mean() if reduction == "mean" else per_value.sum())


def bs_loss(loss_e: float, loss_d: float, hp: BsHyperParams = BsHyperParams()) -> float:
    """Weighted sum of the classification and suppression losses."""
    if loss_e < 0 or loss_d < 0:
        raise ValueError("component losses must be >= 0")
    return hp.lambda_e * loss_e + hp.lambda_d * loss_d


DEGENERATE_TEMPERATURE = 0.0625


def temperature_at_epoch(s: RefinementSchedule) -> float:
    """Refinement temperature at an epoch: ``0.5 ** (e / -log2(0.0625 / T))``.

    Evaluated exactly as written. For T > 0.0625 the exponent denominator is
    positive and the temperature strictly decreases with the epoch, halving
    every ``-log2(0.0625 / T)`` epochs. T = 0.0625 makes the denominator zero
    and is rejected.
    """
    if s.initial_temperature == DEGENERATE_TEMPERATURE:
        raise DegenerateScheduleError(
            f"initial temperature {DEGENERATE_TEMPERATURE} makes the decay rate degenerate"
        )
    denom = -math.log2(DEGENERATE_TEMPERATURE / s.initial_temperature)
    return 0.5 ** (s.epoch / denom)


def refinement_loss(
    y1: Sequence[float] | np.ndarray, y2: Sequence[float] | np.ndarray, t: float
) -> float:
    """Temperature-scaled KL divergence between two logit vectors.

    With ``q = softmax(y2 / t)`` and ``lp = log_softmax(y1 / t)`` the loss is
    ``sum(q * (log q - lp))``: nonnegative, zero exactly when the scaled
    softmax distributions coincide.
    """
    a = _as_float_array(y1, "y1")
    b = _as_float_array(y2, "y2")
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not t > 0:
        raise ValueError(f"temperature must be > 0, got {t!r}")
    lp = _log_softmax(a / t)
    lq = _log_softmax(b / t)
    q = np.exp(lq)
    return float((q * (lq - lp)).sum())


def backend_total_loss(loss_bs: float, loss_r: float) -> float:
    """Sum of the foreground/background loss and the refinement loss."""
    if loss_bs < 0 or loss_r < 0:
        raise ValueError("loss parts must be >= 0")
    return loss_bs + loss_r


def localizer_loss(parts: LocalizerLossParts) -> float:
    """Total localizer loss: objectness plus box regression."""
    return parts.l_obj + parts.l_reg


def objectness_loss(
    predicted: Sequence[float] | np.ndarray, labels: Sequence[float] | np.ndarray
) -> float:
    """Mean binary cross entropy, the default objectness component."""
    p = _as_float_array(predicted, "predicted")
    y = _as_float_array(labels, "labels")
    if p.shape != y.shape:
        raise ShapeMismatchError(f"shape mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, LOG_EPSILON, 1.0 - LOG_EPSILON)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def box_regression_loss(
    predicted: Sequence[float] | np.ndarray, target: Sequence[float] | np.ndarray
) -> float:
    """Mean smooth-L1 on offsets, the default box regression component."""
    p = _as_float_array(predicted, "predicted")
    y = _as_float_array(target, "target")
    if p.shape != y.shape:
        raise ShapeMismatchError(f"shape mismatch: {p.shape} vs {y.shape}")
    diff = np.abs(p - y)
    per_value = np.where(diff < 1.0, 0.5 * diff * diff, diff - 0.5)
    return float(per_value.mean())


def k_schedule(block_index: int) -> int:
    """Selection count for pyramid block 1..4: 256, 128, 64, 32."""
    if block_index not in (1, 2, 3, 4):
        raise BadBlockIndexError(f"block index must be in 1..4, got {block_index!r}")
    return K_VALUES[block_index - 1]
