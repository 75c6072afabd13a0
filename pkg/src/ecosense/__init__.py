"""Difficulty-aware edge-cloud sensing simulator and math library.

Deterministic, seedable models of an edge-cloud detection pipeline: proposals
are routed between a modeled edge classifier and a modeled cloud classifier,
with exact energy, bandwidth, and latency accounting against measured
platform profiles, plus the small-tensor math the models are built from.
"""

__version__ = "0.1.0"

from .domain import (
    BoundingBox,
    ChannelProfile,
    ClassCatalog,
    Frame,
    PlatformProfile,
    Proposal,
    crop_bytes_for,
    validate_frame,
)
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
from .pipeline import (
    FrameResult,
    OracleSet,
    ProposalEvent,
    RoutingPolicy,
    process_frame,
    run_scenario,
)
from .accounting import (
    RunLedger,
    SystemMetrics,
    breakdown,
    build_ledger,
    dtvr,
    ecr,
    energy_of,
    realtime_check,
)
from .config import ScenarioConfig, generate_frames, load_config, load_preset
from .calibrate import CalibrationTarget, UnattainableTargetError, calibrate
from .runner import Report, config_digest, emit, run, sweep

__all__ = [
    "__version__",
    "BoundingBox",
    "Proposal",
    "Frame",
    "ClassCatalog",
    "PlatformProfile",
    "ChannelProfile",
    "crop_bytes_for",
    "validate_frame",
    "SeededRng",
    "ConfusionMatrix",
    "DifficultyModel",
    "LocalizerModel",
    "assign_difficulty",
    "estimate_difficulty",
    "classify",
    "localize",
    "RoutingPolicy",
    "ProposalEvent",
    "FrameResult",
    "OracleSet",
    "process_frame",
    "run_scenario",
    "RunLedger",
    "SystemMetrics",
    "build_ledger",
    "energy_of",
    "dtvr",
    "ecr",
    "breakdown",
    "realtime_check",
    "ScenarioConfig",
    "generate_frames",
    "load_config",
    "load_preset",
    "CalibrationTarget",
    "UnattainableTargetError",
    "calibrate",
    "Report",
    "config_digest",
    "run",
    "sweep",
    "emit",
]
