"""Command line interface.

Exit codes: 0 success, 2 validation or parse failure, 3 unattainable
calibration target, 4 I/O failure. ``ECOSENSE_SEED`` overrides the config
seed for any command that loads a config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .accounting import REALTIME_BOUND_MS, realtime_check
from .calibrate import (
    CalibrationTarget,
    UnattainableTargetError,
    analytic_dtvr,
    analytic_ecr,
    calibrate,
)
from .config import ConfigError, ScenarioConfig, load_config, load_config_dict
from .pipeline import MODES
from .presets import UnknownPresetError, platforms, scenario_names, scenario_raw
from .runner import config_digest, emit, render_sweep, run, set_param, sweep

__all__ = ["build_parser", "main"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNATTAINABLE = 3
EXIT_IO = 4

SEED_ENV_VAR = "ECOSENSE_SEED"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecosense",
        description="Deterministic edge-cloud collaborative sensing simulator.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="check a scenario config and print its digest")
    validate.add_argument("config", help="config file path or bundled preset name")

    run_cmd = sub.add_parser("run", help="simulate one or more modes and report metrics")
    run_cmd.add_argument("config", help="config file path or bundled preset name")
    run_cmd.add_argument(
        "--modes",
        default=",".join(MODES),
        help=f"comma-separated subset of {','.join(MODES)}",
    )
    run_cmd.add_argument("--out", help="write the report here instead of stdout")
    run_cmd.add_argument("--format", choices=("json", "csv"), default="json")

    sweep_cmd = sub.add_parser("sweep", help="rerun over a parameter grid, CSV output")
    sweep_cmd.add_argument("config", help="config file path or bundled preset name")
    sweep_cmd.add_argument("--param", default="routing.tau", help="dotted config field")
    sweep_cmd.add_argument("--grid", default="0:1:0.05", help="start:stop:step, stop inclusive")
    sweep_cmd.add_argument("--modes", default="collaborative")
    sweep_cmd.add_argument("--out", help="write CSV here instead of stdout")

    cal = sub.add_parser("calibrate", help="solve free parameters for target ratios")
    cal.add_argument("config", help="base config file path or bundled preset name")
    cal.add_argument("--dtvr", type=float, required=True, help="target transmission ratio")
    cal.add_argument("--ecr", type=float, required=True, help="target energy ratio")
    cal.add_argument("--out", help="write the calibrated config JSON here")

    sub.add_parser("platforms", help="print bundled platform presets with realtime verdicts")
    return parser


def _resolve_config(name_or_path: str) -> ScenarioConfig:
    """Load a config from a path, falling back to bundled preset names."""
    path = Path(name_or_path)
    if path.exists():
        config = load_config(path)
    else:
        if name_or_path not in scenario_names():
            if name_or_path.endswith(".json") or "/" in name_or_path:
                raise FileNotFoundError(f"config file not found: {name_or_path}")
            raise UnknownPresetError(
                f"{name_or_path!r} is neither a file nor a bundled preset "
                f"({', '.join(scenario_names())})"
            )
        config = load_config_dict(scenario_raw(name_or_path))
    seed_override = os.environ.get(SEED_ENV_VAR)
    if seed_override is not None:
        try:
            config = set_param(config, "seed", int(seed_override))
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR}: {exc}") from exc
    return config


def _parse_modes(text: str) -> list[str]:
    modes = [m.strip() for m in text.split(",") if m.strip()]
    if not modes:
        raise ConfigError("--modes: need at least one mode")
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"--modes: unknown mode {mode!r}, expected one of {MODES}")
    return modes


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid: expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"--grid: need step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step)) + 1
    values = [round(start + i * step, 10) for i in range(count)]
    return [v for v in values if v <= stop + 1e-9]


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _resolve_config(args.config)
    print(f"ok {config_digest(config)}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    config = _resolve_config(args.config)
    report = run(config, modes=_parse_modes(args.modes))
    if args.out is None:
        sys.stdout.write(emit(report, args.format))
    else:
        emit(report, args.format, args.out)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _resolve_config(args.config)
    rows = sweep(config, args.param, _parse_grid(args.grid), modes=_parse_modes(args.modes))
    _write_or_print(render_sweep(rows), args.out)
    return EXIT_OK


def _cmd_calibrate(args: argparse.Namespace) -> int:
    base = _resolve_config(args.config)
    target = CalibrationTarget(target_dtvr=args.dtvr, target_ecr=args.ecr)
    calibrated = calibrate(target, base)
    print(f"p_hard = {calibrated.difficulty.p_hard!r}")
    print(f"joules_per_byte = {calibrated.channel.joules_per_byte!r}")
    print(f"analytic dtvr = {analytic_dtvr(calibrated):.9f}")
    print(f"analytic ecr = {analytic_ecr(calibrated):.9f}")
    if args.out is not None:
        text = json.dumps(calibrated.to_dict(), indent=2) + "\n"
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_platforms(_args: argparse.Namespace) -> int:
    rows = platforms()
    name_width = max(len(p.name) for p in rows)
    print(f"{'platform':<{name_width}}  role   latency_ms  power_w  realtime(<{REALTIME_BOUND_MS:g} ms)")
    for profile in rows:
        verdict = ("pass" if realtime_check(profile) else "fail") if profile.role == "edge" else "-"
        print(
            f"{profile.name:<{name_width}}  {profile.role:<5}  "
            f"{profile.latency_ms:>10g}  {profile.power_w:>7g}  {verdict}"
        )
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
    "platforms": _cmd_platforms,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UnattainableTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNATTAINABLE
    except (ConfigError, UnknownPresetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
