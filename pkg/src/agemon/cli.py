"""Command-line campaign runner.

Verbs: ``run``, ``validate``, ``score``, ``sweep``. Exit codes: 0 success,
2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import campaign as campaign_mod
from .analytics import PayloadFeatures, ReportError, score_payloads
from .campaign import run_campaign, validate_config
from .controller import DeviceBelowMinimumError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config(path: str):
    config, errors = validate_config(path)
    if errors:
        for message in errors:
            print(f"config error: {message}", file=sys.stderr)
    return config


def _cmd_validate(args) -> int:
    config = _load_config(args.config)
    if config is None:
        return EXIT_CONFIG
    print("configuration valid")
    print(config.to_ini(), end="")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if config is None:
        return EXIT_CONFIG
    try:
        report = run_campaign(config, ci_mode=args.ci)
        paths = campaign_mod.export_campaign(report, config.output_dir)
    except (DeviceBelowMinimumError, ReportError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for label, path in sorted(paths.items()):
        print(f"{label}: {path}")
    print(f"virtual campaign time: {report.virtual_time_s:.3f} s")
    return EXIT_OK


def _cmd_score(args) -> int:
    try:
        summary = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"runtime error: cannot read report: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    scores = summary.get("scores")
    if not scores:
        print("runtime error: report carries no scores", file=sys.stderr)
        return EXIT_RUNTIME
    header = f"{'payload':<14} {'MEF':>5} {'time':>5} {'transition':>10}"
    print(header)
    for name, row in sorted(scores.items()):
        print(
            f"{name:<14} {row['mef']:>5.1f} {row['execution_time']:>5.1f} "
            f"{row['error_transition']:>10.1f}"
        )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if config is None:
        return EXIT_CONFIG
    if not 0 <= args.device < config.device_count:
        print(
            f"config error: device index {args.device} outside fleet "
            f"of {config.device_count}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    if args.payload not in config.payloads:
        print(
            f"config error: payload {args.payload!r} not in campaign "
            f"selection {list(config.payloads)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG

    import numpy as np

    from .controller import find_mef, sweep

    devices = campaign_mod.build_devices(config)
    device = devices[args.device]
    device.set_temperature(args.temperature)
    payload = next(
        p for p in config.payload_objects() if p.name.value == args.payload
    )
    device_config = config.device_configs()[0]
    search = config.search_config()
    transition = config.transition_model()
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([config.master_seed, args.device]))
    )
    try:
        outcome = find_mef(device, payload, device_config, search, rng, transition)
        window = sweep(
            device, payload, device_config,
            campaign_mod.SWEEP_WINDOW[0] * outcome.mef,
            campaign_mod.SWEEP_WINDOW[1] * outcome.mef,
            config.sweep_step_hz, config.runs_per_frequency, rng, transition,
            search.watchdog_timeout,
        )
    except DeviceBelowMinimumError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"device {device.device_id} payload {args.payload} "
          f"config {device_config.flash_buffering.value}")
    print(f"mef_hz: {outcome.mef}")
    print("frequency_hz,error_fraction,hang_fraction")
    for result in window:
        print(f"{result.frequency},{result.error_fraction},{result.hang_fraction}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agemon",
        description="Simulated SBST ageing-monitoring campaigns",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full campaign")
    run.add_argument("config", help="campaign INI file")
    run.add_argument(
        "--ci", action="store_true",
        help="CI mode: 50 runs per frequency and a coarser sweep grid",
    )
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate", help="validate a campaign file")
    validate.add_argument("config")
    validate.set_defaults(func=_cmd_validate)

    score = sub.add_parser("score", help="print the score table of a report")
    score.add_argument("report", help="summary.json produced by `run`")
    score.set_defaults(func=_cmd_score)

    sweep_cmd = sub.add_parser("sweep", help="sweep one device and payload")
    sweep_cmd.add_argument("config")
    sweep_cmd.add_argument("--device", type=int, required=True)
    sweep_cmd.add_argument("--payload", required=True)
    sweep_cmd.add_argument("--temperature", type=float, default=20.0)
    sweep_cmd.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
