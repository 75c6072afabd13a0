"""Energy, bandwidth, and latency bookkeeping over frame results.

Ledgers are plain additive folds: concatenating two runs and summing their
ledgers commute. Ratio metrics compare a run against a centralized baseline
(whole frames shipped, zero edge inference).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .domain import ChannelProfile, PlatformProfile
from .pipeline import FrameResult

__all__ = [
    "REALTIME_BOUND_MS",
    "DivisionByZeroBaselineError",
    "ZeroTotalEnergyError",
    "RunLedger",
    "SystemMetrics",
    "build_ledger",
    "energy_of",
    "dtvr",
    "ecr",
    "breakdown",
    "realtime_check",
]

# Real-time latency budget for front-end devices, in milliseconds.
REALTIME_BOUND_MS = 66.0


class DivisionByZeroBaselineError(ValueError):
    """Baseline run has no transmission or energy to compare against."""


class ZeroTotalEnergyError(ValueError):
    """Cannot normalize an energy breakdown that sums to zero."""


@dataclass
class RunLedger:
    """Accumulated totals of one scenario run.

    ``bytes_up`` is everything sent toward the cloud (crops plus upstream
    envelopes, or whole frames in centralized mode); ``bytes_down`` records
    returned result envelopes and is excluded from transmission-volume and
    energy metrics. Latencies are summed busy time per stage.
    """

    frames: int = 0
    events: int = 0
    edge_inferences: int = 0
    cloud_inferences: int = 0
    bytes_up: int = 0
    bytes_down: int = 0
    edge_energy_j: float = 0.0
    comm_energy_j: float = 0.0
    cloud_energy_j: float = 0.0
    edge_latency_ms: float = 0.0
    comm_latency_ms: float = 0.0
    cloud_latency_ms: float = 0.0
    correct_by_class: dict[int, int] = field(default_factory=dict)
    incorrect_by_class: dict[int, int] = field(default_factory=dict)

    @property
    def total_energy_j(self) -> float:
        return self.edge_energy_j + self.comm_energy_j + self.cloud_energy_j

    @property
    def edge_latency_ms_per_frame(self) -> float:
        return self.edge_latency_ms / self.frames if self.frames else 0.0

    @property
    def correct(self) -> int:
        return sum(self.correct_by_class.values())

    @property
    def incorrect(self) -> int:
        return sum(self.incorrect_by_class.values())

    @property
    def accuracy(self) -> float:
        total = self.correct + self.incorrect
        return self.correct / total if total else 0.0

    def __add__(self, other: "RunLedger") -> "RunLedger":
        merged_correct = dict(self.correct_by_class)
        for cls_idx, count in other.correct_by_class.items():
            merged_correct[cls_idx] = merged_correct.get(cls_idx, 0) + count
        merged_incorrect = dict(self.incorrect_by_class)
        for cls_idx, count in other.incorrect_by_class.items():
            merged_incorrect[cls_idx] = merged_incorrect.get(cls_idx, 0) + count
        return RunLedger(
            frames=self.frames + other.frames,
            events=self.events + other.events,
            edge_inferences=self.edge_inferences + other.edge_inferences,
            cloud_inferences=self.cloud_inferences + other.cloud_inferences,
            bytes_up=self.bytes_up + other.bytes_up,
            bytes_down=self.bytes_down + other.bytes_down,
            edge_energy_j=self.edge_energy_j + other.edge_energy_j,
            comm_energy_j=self.comm_energy_j + other.comm_energy_j,
            cloud_energy_j=self.cloud_energy_j + other.cloud_energy_j,
            edge_latency_ms=self.edge_latency_ms + other.edge_latency_ms,
            comm_latency_ms=self.comm_latency_ms + other.comm_latency_ms,
            cloud_latency_ms=self.cloud_latency_ms + other.cloud_latency_ms,
            correct_by_class=merged_correct,
            incorrect_by_class=merged_incorrect,
        )

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "events": self.events,
            "edge_inferences": self.edge_inferences,
            "cloud_inferences": self.cloud_inferences,
            "bytes_up": self.bytes_up,
            "bytes_down": self.bytes_down,
            "edge_energy_j": self.edge_energy_j,
            "comm_energy_j": self.comm_energy_j,
            "cloud_energy_j": self.cloud_energy_j,
            "total_energy_j": self.total_energy_j,
            "edge_latency_ms": self.edge_latency_ms,
            "edge_latency_ms_per_frame": self.edge_latency_ms_per_frame,
            "comm_latency_ms": self.comm_latency_ms,
            "cloud_latency_ms": self.cloud_latency_ms,
            "correct": self.correct,
            "incorrect": self.incorrect,
            "accuracy": self.accuracy,
            "correct_by_class": {str(k): self.correct_by_class[k]
                                 for k in sorted(self.correct_by_class)},
            "incorrect_by_class": {str(k): self.incorrect_by_class[k]
                                   for k in sorted(self.incorrect_by_class)},
        }


@dataclass(frozen=True)
class SystemMetrics:
    """Headline ratios of one run against the centralized baseline."""

    dtvr: float
    ecr: float
    accuracy: float
    breakdown: tuple[float, float, float]
    realtime_ok: bool

    def __post_init__(self) -> None:
        if self.dtvr < 0 or self.ecr < 0:
            raise ValueError("ratios must be >= 0")
        edge_share, comm_share, cloud_share = self.breakdown
        if min(edge_share, comm_share, cloud_share) < 0:
            raise ValueError("breakdown components must be >= 0")
        if abs(edge_share + comm_share + cloud_share - 1.0) > 1e-9:
            raise ValueError("breakdown must sum to 1")

    def to_dict(self) -> dict:
        edge_share, comm_share, cloud_share = self.breakdown
        return {
            "dtvr": self.dtvr,
            "ecr": self.ecr,
            "accuracy": self.accuracy,
            "breakdown_edge": edge_share,
            "breakdown_comm": comm_share,
            "breakdown_cloud": cloud_share,
            "realtime_ok": self.realtime_ok,
        }


def energy_of(
    results: Iterable[FrameResult],
    edge: PlatformProfile,
    cloud: PlatformProfile,
    channel: ChannelProfile,
) -> tuple[float, float, float]:
    """Joules spent on edge inference, transmission, and cloud inference.

    Each inference costs the platform's power times its latency; channel
    energy is the per-byte cost over all upstream bytes.
    """
    edge_inferences = 0
    cloud_inferences = 0
    bytes_up = 0
    for result in results:
        edge_inferences += result.edge_inferences
        cloud_inferences += result.cloud_inferences
        bytes_up += result.frame_bytes_tx + sum(e.bytes_tx for e in result.events)
    edge_j = edge_inferences * edge.energy_per_inference_j
    cloud_j = cloud_inferences * cloud.energy_per_inference_j
    comm_j = bytes_up * channel.joules_per_byte
    return edge_j, comm_j, cloud_j


def build_ledger(
    results: Iterable[FrameResult],
    edge: PlatformProfile,
    cloud: PlatformProfile,
    channel: ChannelProfile,
) -> RunLedger:
    """Fold frame results into one additive ledger."""
    ledger = RunLedger()
    for result in results:
        ledger.frames += 1
        ledger.edge_inferences += result.edge_inferences
        ledger.cloud_inferences += result.cloud_inferences
        ledger.bytes_up += result.frame_bytes_tx
        for event in result.events:
            ledger.events += 1
            ledger.bytes_up += event.bytes_tx
            ledger.bytes_down += event.bytes_down
            bucket = (
                ledger.correct_by_class if event.correct else ledger.incorrect_by_class
            )
            cls_idx = event.proposal.true_class
            bucket[cls_idx] = bucket.get(cls_idx, 0) + 1
    ledger.edge_energy_j = ledger.edge_inferences * edge.energy_per_inference_j
    ledger.cloud_energy_j = ledger.cloud_inferences * cloud.energy_per_inference_j
    ledger.comm_energy_j = ledger.bytes_up * channel.joules_per_byte
    ledger.edge_latency_ms = ledger.edge_inferences * edge.latency_ms
    ledger.cloud_latency_ms = ledger.cloud_inferences * cloud.latency_ms
    ledger.comm_latency_ms = ledger.bytes_up / channel.bytes_per_second * 1000.0
    return ledger


def dtvr(run_ours: RunLedger, run_centralized: RunLedger) -> float:
    """Upstream transmission volume relative to the centralized baseline."""
    if run_centralized.bytes_up <= 0:
        raise DivisionByZeroBaselineError("centralized baseline transmitted zero bytes")
    return run_ours.bytes_up / run_centralized.bytes_up


def ecr(run_ours: RunLedger, run_centralized: RunLedger) -> float:
    """Total energy relative to the centralized baseline."""
    if run_centralized.total_energy_j <= 0:
        raise DivisionByZeroBaselineError("centralized baseline consumed zero energy")
    return run_ours.total_energy_j / run_centralized.total_energy_j


def breakdown(ledger: RunLedger) -> tuple[float, float, float]:
    """Normalized (edge, comm, cloud) energy shares, summing to one."""
    total = ledger.total_energy_j
    if total <= 0:
        raise ZeroTotalEnergyError("run consumed zero energy; nothing to normalize")
    return (
        ledger.edge_energy_j / total,
        ledger.comm_energy_j / total,
        ledger.cloud_energy_j / total,
    )


def realtime_check(profile: PlatformProfile, bound_ms: float = REALTIME_BOUND_MS) -> bool:
    """True when the platform's per-inference latency beats the budget."""
    return profile.latency_ms < bound_ms
