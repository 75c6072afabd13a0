"""Per-frame routing state machine.

A frame flows through localize, NMS, difficulty estimation, and routing:
each surviving proposal is classified on the edge or shipped (as a crop) to
the cloud. All difficulty draws happen before any routing decision, so for a
fixed seed the set of difficulty scores does not depend on the threshold and
routing volume is monotone in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .domain import ChannelProfile, ClassCatalog, Frame, Proposal, validate_frame
from .modelmath import nms
from .oracles import (
    ConfusionMatrix,
    DifficultyModel,
    LocalizerModel,
    SeededRng,
    assign_difficulty,
    classify,
    estimate_difficulty,
    localize,
)

if TYPE_CHECKING:
    from .config import ScenarioConfig

__all__ = [
    "MODES",
    "ROUTE_EDGE",
    "ROUTE_CLOUD",
    "CatalogMismatchError",
    "FrameProcessingError",
    "RoutingPolicy",
    "ProposalEvent",
    "FrameResult",
    "OracleSet",
    "process_frame",
    "run_scenario",
    "PIPELINE_STREAM",
]

MODES = ("collaborative", "all-edge", "all-cloud")
ROUTE_EDGE = "edge"
ROUTE_CLOUD = "cloud"

# Spawn-key namespace for per-frame pipeline streams; frame generation uses
# its own namespace (see config), so policies never perturb the frames.
PIPELINE_STREAM = 1


class CatalogMismatchError(ValueError):
    """Oracle components disagree on the number of classes."""


class FrameProcessingError(RuntimeError):
    """Wraps a failure with the index of the frame that caused it."""

    def __init__(self, frame_id: int, cause: Exception) -> None:
        super().__init__(f"frame {frame_id}: {cause}")
        self.frame_id = frame_id
        self.cause = cause


@dataclass(frozen=True)
class RoutingPolicy:
    """Dispatch knobs: difficulty threshold, NMS threshold, and mode."""

    tau: float = 0.5
    nms_iou: float = 0.5
    mode: str = "collaborative"

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau!r}")
        if not 0.0 < self.nms_iou <= 1.0:
            raise ValueError(f"nms_iou must be in (0, 1], got {self.nms_iou!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def to_dict(self) -> dict:
        return {"tau": self.tau, "nms_iou": self.nms_iou, "mode": self.mode}

    @classmethod
    def from_dict(cls, data: dict) -> "RoutingPolicy":
        return cls(
            tau=float(data.get("tau", 0.5)),
            nms_iou=float(data.get("nms_iou", 0.5)),
            mode=str(data.get("mode", "collaborative")),
        )


@dataclass(frozen=True)
class ProposalEvent:
    """Outcome record for one routed proposal.

    ``bytes_tx`` is the upstream volume (crop plus result envelope for
    cloud-routed proposals in collaborative mode, 0 otherwise) and
    ``bytes_down`` the downstream result envelope. Transmission-volume
    metrics count upstream bytes only; both directions are recorded.
    """

    proposal: Proposal
    difficulty_score: float
    is_hard: bool
    routed_to: str
    predicted_class: int
    correct: bool
    bytes_tx: int
    bytes_down: int


@dataclass(frozen=True)
class FrameResult:
    """Per-frame event list plus inference and transmission totals.

    ``frame_bytes_tx`` carries whole-frame upstream bytes, nonzero only in
    all-cloud mode where the frame itself is shipped once.
    """

    frame_id: int
    events: tuple[ProposalEvent, ...]
    edge_inferences: int
    cloud_inferences: int
    frame_bytes_tx: int


@dataclass(frozen=True)
class OracleSet:
    """The model bundle one scenario runs against."""

    catalog: ClassCatalog
    localizer: LocalizerModel
    difficulty: DifficultyModel
    edge_cm: ConfusionMatrix
    cloud_cm: ConfusionMatrix
    channel: ChannelProfile

    def __post_init__(self) -> None:
        n = self.catalog.num_classes
        if self.edge_cm.num_classes != n:
            raise CatalogMismatchError(
                f"edge matrix has {self.edge_cm.num_classes} classes, catalog has {n}"
            )
        if self.cloud_cm.num_classes != n:
            raise CatalogMismatchError(
                f"cloud matrix has {self.cloud_cm.num_classes} classes, catalog has {n}"
            )


def _edge_predict(
    proposal: Proposal, edge_correct: bool, cm: ConfusionMatrix, rng: SeededRng
) -> int:
    """Edge outcome honoring the pre-drawn correctness flag.

    The flag decides right or wrong; the confusion matrix only shapes which
    wrong class comes out. This keeps realized edge accuracy identical to
    the difficulty model by construction.
    """
    wrong = rng.categorical(cm.error_profile(proposal.true_class))
    return proposal.true_class if edge_correct else wrong


def process_frame(
    frame: Frame, policy: RoutingPolicy, oracles: OracleSet, rng: SeededRng
) -> FrameResult:
    """Run one frame through localize, NMS, difficulty routing, and classify."""
    validate_frame(frame, oracles.catalog)
    proposals = localize(frame, oracles.localizer, rng)
    kept = nms(proposals, policy.nms_iou)

    # Difficulty draws for every proposal come before routing or
    # classification, so the score set is invariant under tau.
    difficulty = [assign_difficulty(p, oracles.difficulty, rng) for p in kept]
    scores = [
        estimate_difficulty(is_hard, oracles.difficulty, rng) for is_hard, _ in difficulty
    ]

    metadata = oracles.channel.result_metadata_bytes
    events: list[ProposalEvent] = []
    edge_count = 0
    cloud_count = 0
    for proposal, (is_hard, edge_correct), score in zip(kept, difficulty, scores):
        if policy.mode == "all-cloud":
            to_cloud = True
        elif policy.mode == "all-edge":
            to_cloud = False
        else:
            to_cloud = score >= policy.tau
        if to_cloud:
            predicted = classify(proposal.true_class, oracles.cloud_cm, rng)
            bytes_tx = proposal.crop_bytes + metadata if policy.mode == "collaborative" else 0
            bytes_down = metadata
            cloud_count += 1
        else:
            predicted = _edge_predict(proposal, edge_correct, oracles.edge_cm, rng)
            bytes_tx = 0
            bytes_down = 0
            edge_count += 1
        events.append(
            ProposalEvent(
                proposal=proposal,
                difficulty_score=score,
                is_hard=is_hard,
                routed_to=ROUTE_CLOUD if to_cloud else ROUTE_EDGE,
                predicted_class=predicted,
                correct=predicted == proposal.true_class,
                bytes_tx=bytes_tx,
                bytes_down=bytes_down,
            )
        )

    return FrameResult(
        frame_id=frame.frame_id,
        events=tuple(events),
        edge_inferences=edge_count,
        cloud_inferences=cloud_count,
        frame_bytes_tx=frame.bytes if policy.mode == "all-cloud" else 0,
    )


def run_scenario(
    config: "ScenarioConfig", frames: Iterable[Frame] | None = None
) -> list[FrameResult]:
    """Process a scenario's frames in order, one RNG substream per frame.

    Frames are regenerated from the config seed unless supplied, so repeated
    calls (and different routing modes) see identical streams. Failures are
    wrapped with the offending frame id.
    """
    if frames is None:
        frames = config.build_frames()
    oracles = config.build_oracles()
    results: list[FrameResult] = []
    for frame in frames:
        rng = SeededRng(config.seed, spawn_key=(PIPELINE_STREAM, frame.frame_id))
        try:
            results.append(process_frame(frame, config.routing, oracles, rng))
        except ValueError as exc:
            raise FrameProcessingError(frame.frame_id, exc) from exc
    return results
