"""Closed-form calibration of a scenario against target headline ratios.

The transmission ratio pins the hardness prior (through the routed
fraction), then the energy ratio pins the channel's per-byte cost. Both
solves are closed-form on the analytic expectation model, with a bisection
fallback, and the returned config reproduces the targets analytically.

The expectation model requires a localizer without duplicates or jitter
(recall may be fractional): under that model the expected proposal count and
crop volume are exact, so a long enough simulation converges to the targets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .config import ScenarioConfig
from .oracles import score_tail_probability

__all__ = [
    "CalibrationTarget",
    "UnattainableTargetError",
    "expected_crop_bytes",
    "expected_proposals_per_frame",
    "routed_probability",
    "analytic_dtvr",
    "analytic_ecr",
    "calibrate",
]

_ANALYTIC_TOL = 1e-9


@dataclass(frozen=True)
class CalibrationTarget:
    """Headline ratios a calibrated scenario should reproduce."""

    target_dtvr: float
    target_ecr: float

    def __post_init__(self) -> None:
        for name in ("target_dtvr", "target_ecr"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value!r}")


class UnattainableTargetError(ValueError):
    """Target ratio lies outside what the base scenario can reach."""

    def __init__(self, target: str, bound: str) -> None:
        super().__init__(f"{target} target unattainable: {bound}")
        self.target = target
        self.bound = bound


def expected_crop_bytes(config: ScenarioConfig) -> float:
    """Mean crop payload of one proposal (rounding to whole bytes ignored)."""
    return config.crop_size.mean_area * config.frame.bytes_per_pixel


def expected_proposals_per_frame(config: ScenarioConfig) -> float:
    """Mean surviving proposals per frame under the expectation model."""
    return config.objects_per_frame.mean * config.localizer.recall


def routed_probability(config: ScenarioConfig, p_hard: float | None = None) -> float:
    """P(score >= tau) over the hardness mixture."""
    if p_hard is None:
        p_hard = config.difficulty.p_hard
    tau = config.routing.tau
    p_route_hard = score_tail_probability(config.difficulty, True, tau)
    p_route_easy = score_tail_probability(config.difficulty, False, tau)
    return p_hard * p_route_hard + (1.0 - p_hard) * p_route_easy


def _upstream_bytes_per_routed(config: ScenarioConfig) -> float:
    return expected_crop_bytes(config) + config.channel.result_metadata_bytes


def analytic_dtvr(config: ScenarioConfig) -> float:
    """Expected transmission ratio of collaborative mode vs centralized."""
    per_frame = (
        expected_proposals_per_frame(config)
        * routed_probability(config)
        * _upstream_bytes_per_routed(config)
    )
    return per_frame / config.frame.frame_bytes


def analytic_ecr(config: ScenarioConfig) -> float:
    """Expected energy ratio of collaborative mode vs centralized."""
    n = expected_proposals_per_frame(config)
    r = routed_probability(config)
    e_edge = config.edge_platform.energy_per_inference_j
    e_cloud = config.cloud_platform.energy_per_inference_j
    jpb = config.channel.joules_per_byte
    ours = n * (1.0 - r) * e_edge + n * r * e_cloud + jpb * n * r * _upstream_bytes_per_routed(config)
    centralized = n * e_cloud + jpb * config.frame.frame_bytes
    return ours / centralized


def _check_model_assumptions(config: ScenarioConfig) -> None:
    if config.localizer.duplicate_rate != 0.0:
        raise ValueError("calibration requires duplicate_rate = 0 (NMS survivors not analytic)")
    if config.localizer.jitter_px != 0.0:
        raise ValueError("calibration requires jitter_px = 0 (crop sizes not analytic)")
    if expected_proposals_per_frame(config) <= 0.0:
        raise ValueError("calibration requires a positive expected proposal count")


def _bisect(
    func: Callable[[float], float], lo: float, hi: float, target: float, iters: int = 200
) -> float:
    f_lo = func(lo)
    f_hi = func(hi)
    if not min(f_lo, f_hi) <= target <= max(f_lo, f_hi):
        raise ValueError(f"target {target} outside [{min(f_lo, f_hi)}, {max(f_lo, f_hi)}]")
    increasing = f_hi >= f_lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (func(mid) < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve_p_hard(target_dtvr: float, config: ScenarioConfig) -> float:
    volume = _upstream_bytes_per_routed(config)
    n = expected_proposals_per_frame(config)
    needed_r = target_dtvr * config.frame.frame_bytes / (n * volume)

    tau = config.routing.tau
    p_route_hard = score_tail_probability(config.difficulty, True, tau)
    p_route_easy = score_tail_probability(config.difficulty, False, tau)
    r_lo = min(p_route_hard, p_route_easy)
    r_hi = max(p_route_hard, p_route_easy)
    if not r_lo <= needed_r <= r_hi:
        raise UnattainableTargetError(
            "dtvr",
            f"needs routed fraction {needed_r:.6g} but the estimator reaches only "
            f"[{r_lo:.6g}, {r_hi:.6g}] (crops cannot exceed frame bytes)",
        )
    if p_route_hard == p_route_easy:
        # Uninformative estimator: every prior gives the same routed fraction.
        return config.difficulty.p_hard
    p_hard = (needed_r - p_route_easy) / (p_route_hard - p_route_easy)
    return min(max(p_hard, 0.0), 1.0)


def _solve_joules_per_byte(target_ecr: float, config: ScenarioConfig) -> float:
    n = expected_proposals_per_frame(config)
    r = routed_probability(config)
    e_edge = config.edge_platform.energy_per_inference_j
    e_cloud = config.cloud_platform.energy_per_inference_j
    inference_ours = n * ((1.0 - r) * e_edge + r * e_cloud)
    inference_centralized = n * e_cloud
    bytes_ours = n * r * _upstream_bytes_per_routed(config)
    bytes_centralized = float(config.frame.frame_bytes)

    transmission_floor = bytes_ours / bytes_centralized
    denominator = target_ecr * bytes_centralized - bytes_ours
    if denominator <= 0.0:
        raise UnattainableTargetError(
            "ecr",
            f"target {target_ecr:.6g} at or below the transmission ratio floor "
            f"{transmission_floor:.6g} (channel cost cannot be negative)",
        )
    numerator = inference_ours - target_ecr * inference_centralized
    if numerator <= 0.0:
        zero_channel = inference_ours / inference_centralized
        raise UnattainableTargetError(
            "ecr",
            f"target {target_ecr:.6g} at or above the zero-channel energy ratio "
            f"{zero_channel:.6g}",
        )
    return numerator / denominator


def calibrate(target: CalibrationTarget, base: ScenarioConfig) -> ScenarioConfig:
    """Solve (p_hard, joules_per_byte) so the analytic ratios hit the target.

    Closed form first; if floating error leaves the analytic check off by
    more than 1e-9, a monotone bisection refines the free parameter.
    """
    _check_model_assumptions(base)

    p_hard = _solve_p_hard(target.target_dtvr, base)
    config = replace(base, difficulty=replace(base.difficulty, p_hard=p_hard))
    if abs(analytic_dtvr(config) - target.target_dtvr) > _ANALYTIC_TOL:
        p_hard = _bisect(
            lambda p: analytic_dtvr(
                replace(base, difficulty=replace(base.difficulty, p_hard=p))
            ),
            0.0,
            1.0,
            target.target_dtvr,
        )
        config = replace(base, difficulty=replace(base.difficulty, p_hard=p_hard))

    jpb = _solve_joules_per_byte(target.target_ecr, config)
    config = replace(config, channel=replace(config.channel, joules_per_byte=jpb))
    if abs(analytic_ecr(config) - target.target_ecr) > _ANALYTIC_TOL:
        jpb = _bisect(
            lambda j: analytic_ecr(
                replace(config, channel=replace(config.channel, joules_per_byte=j))
            ),
            jpb * 0.5,
            jpb * 2.0,
            target.target_ecr,
        )
        config = replace(config, channel=replace(config.channel, joules_per_byte=jpb))
    return config
