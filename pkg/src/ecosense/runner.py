"""Batch runner: executes modes on a shared frame stream and emits reports.

All modes of one invocation see byte-identical frames and per-frame RNG
substreams, so the comparison isolates the routing policy. Ratio metrics are
always taken against the centralized (all-cloud) baseline, which is computed
even when not among the requested modes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .accounting import (
    RunLedger,
    SystemMetrics,
    breakdown,
    build_ledger,
    dtvr,
    ecr,
    realtime_check,
)
from .config import ScenarioConfig
from .pipeline import MODES, run_scenario

__all__ = [
    "METRIC_FIELDS",
    "ModeResult",
    "Report",
    "config_digest",
    "set_param",
    "run",
    "sweep",
    "report_to_dict",
    "render_report",
    "render_sweep",
    "emit",
]

# One CSV row per (mode, metric); order is part of the report contract.
METRIC_FIELDS = (
    "dtvr",
    "ecr",
    "accuracy",
    "breakdown_edge",
    "breakdown_comm",
    "breakdown_cloud",
    "realtime_ok",
)


@dataclass(frozen=True)
class ModeResult:
    mode: str
    metrics: SystemMetrics
    ledger: RunLedger


@dataclass(frozen=True)
class Report:
    """Reproducibility-stamped metrics for one config across modes."""

    version: str
    seed: int
    config_digest: str
    baseline_mode: str
    results: tuple[ModeResult, ...]


def config_digest(config: ScenarioConfig) -> str:
    """SHA-256 over the canonicalized resolved config content."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def set_param(config: ScenarioConfig, dotted_path: str, value: Any) -> ScenarioConfig:
    """Replace one (possibly nested) config field, revalidating on the way."""
    parts = dotted_path.split(".")

    def _rebuild(obj: Any, remaining: Sequence[str]) -> Any:
        name = remaining[0]
        if not hasattr(obj, name):
            raise ValueError(f"unknown config field {dotted_path!r} (no {name!r})")
        if len(remaining) == 1:
            return replace(obj, **{name: value})
        return replace(obj, **{name: _rebuild(getattr(obj, name), remaining[1:])})

    return _rebuild(config, parts)


def _mode_config(config: ScenarioConfig, mode: str) -> ScenarioConfig:
    return replace(config, routing=replace(config.routing, mode=mode))


def run(config: ScenarioConfig, modes: Sequence[str] = MODES) -> Report:
    """Execute the requested modes on identical frames and report metrics."""
    if not modes:
        raise ValueError("need at least one mode")
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")

    frames = config.build_frames()
    edge_platform = config.edge_platform
    cloud_platform = config.cloud_platform
    channel = config.channel

    ledgers: dict[str, RunLedger] = {}
    wanted = list(dict.fromkeys(modes))
    for mode in wanted if "all-cloud" in wanted else wanted + ["all-cloud"]:
        results = run_scenario(_mode_config(config, mode), frames=frames)
        ledgers[mode] = build_ledger(results, edge_platform, cloud_platform, channel)

    baseline = ledgers["all-cloud"]
    realtime_ok = realtime_check(edge_platform)
    mode_results = []
    for mode in wanted:
        ledger = ledgers[mode]
        metrics = SystemMetrics(
            dtvr=dtvr(ledger, baseline),
            ecr=ecr(ledger, baseline),
            accuracy=ledger.accuracy,
            breakdown=breakdown(ledger),
            realtime_ok=realtime_ok,
        )
        mode_results.append(ModeResult(mode=mode, metrics=metrics, ledger=ledger))

    return Report(
        version=__version__,
        seed=config.seed,
        config_digest=config_digest(config),
        baseline_mode="all-cloud",
        results=tuple(mode_results),
    )


def report_to_dict(report: Report) -> dict[str, Any]:
    return {
        "version": report.version,
        "seed": report.seed,
        "config_digest": report.config_digest,
        "baseline_mode": report.baseline_mode,
        "modes": {
            result.mode: {
                "metrics": result.metrics.to_dict(),
                "ledger": result.ledger.to_dict(),
            }
            for result in report.results
        },
    }


def render_report(report: Report, fmt: str = "json") -> str:
    """Serialize a report with stable field ordering."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["mode", "metric", "value"])
        for result in report.results:
            metric_values = result.metrics.to_dict()
            for metric in METRIC_FIELDS:
                writer.writerow([result.mode, metric, metric_values[metric]])
        return buffer.getvalue()
    raise ValueError(f"unknown format {fmt!r}, expected 'json' or 'csv'")


def emit(report: Report, fmt: str = "json", path: str | Path | None = None) -> str:
    """Render a report; write it to ``path`` when given. Returns the text."""
    text = render_report(report, fmt)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def sweep(
    config: ScenarioConfig,
    param: str,
    values: Iterable[float],
    modes: Sequence[str] = ("collaborative",),
) -> list[dict[str, Any]]:
    """Rerun the scenario across a parameter grid; one row per (value, mode)."""
    rows: list[dict[str, Any]] = []
    for value in values:
        report = run(set_param(config, param, value), modes=modes)
        for result in report.results:
            rows.append(
                {
                    "param": param,
                    "value": value,
                    "mode": result.mode,
                    "dtvr": result.metrics.dtvr,
                    "ecr": result.metrics.ecr,
                    "accuracy": result.metrics.accuracy,
                    "bytes_up": result.ledger.bytes_up,
                    "cloud_inferences": result.ledger.cloud_inferences,
                }
            )
    return rows


def render_sweep(rows: Sequence[dict[str, Any]]) -> str:
    """CSV text for sweep rows, one line per (value, mode)."""
    columns = ["param", "value", "mode", "dtvr", "ecr", "accuracy", "bytes_up", "cloud_inferences"]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] for c in columns])
    return buffer.getvalue()
