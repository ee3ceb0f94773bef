"""Command-line entry point.

Subcommands: ``monitor``, ``experiment``, ``simulate``, ``calibrate``,
``gen`` and ``config``. Exit codes are 0 on success, 1 on invalid input or
configuration (including a missing input file) and 2 on runtime failure,
such as a refused overwrite.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from .config import (
    DRIFT_TYPES,
    PRESETS,
    SCENARIOS,
    Config,
    ConfigError,
    dumps_config,
    load_config,
    validate_config,
)
from .events import MonitoringWindow
from .experiment import (
    emit_report,
    monitor_stream,
    run_experiment,
    scenario_table,
    summary_table,
    synthetic_stream,
)
from .ingest import IngestError, export_events, ingest
from .proxies import ReferenceProfile
from .scorer import predict_proba, train_logistic
from .simulator import simulate_all, trajectory_table

logger = logging.getLogger("evidence_sufficiency")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

CHECKPOINT_DAYS = (30, 60, 90, 180)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, default_preset: str) -> None:
    p.add_argument("--config", type=Path, help="INI file overriding the preset")
    p.add_argument(
        "--preset", choices=sorted(PRESETS), default=default_preset,
        help=f"base configuration (default: {default_preset})",
    )
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--window-days", type=float, help="monitoring window length in days")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evidence-sufficiency", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("monitor", help="assess an observed event stream window by window")
    p.add_argument("input", type=Path, help="CSV or JSONL event file")
    _common(p, "default")
    p.add_argument("--format", choices=("csv", "jsonl"), help="input format (default: file suffix)")
    p.add_argument("--allow-unsorted", action="store_true", help="sort input by t instead of rejecting it")
    p.add_argument("--out", type=Path, help="write report files to this directory")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("experiment", help="run the drift-injection scenario suite")
    _common(p, "synthetic")
    p.add_argument("--input", type=Path, help="event file to use instead of the synthetic stream")
    p.add_argument("--format", choices=("csv", "jsonl"), help="input format (default: file suffix)")
    p.add_argument(
        "--scenario", action="append", choices=SCENARIOS,
        help="scenario to run (repeatable; default: all). The baseline always runs.",
    )
    p.add_argument("--out", type=Path, help="write report files to this directory")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("simulate", help="blind-period sufficiency trajectories")
    _common(p, "default")
    p.add_argument("--drift", action="append", choices=DRIFT_TYPES, help="drift regime (repeatable)")
    p.add_argument("--horizon", type=int, help="days to simulate")
    p.add_argument("--out", type=Path, help="write one trajectory table per regime here")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("calibrate", help="normalization caps from a reference event file")
    p.add_argument("input", type=Path, help="CSV or JSONL reference-window events")
    _common(p, "synthetic")
    p.add_argument("--format", choices=("csv", "jsonl"), help="input format (default: file suffix)")
    p.add_argument("--sub-windows", type=int, help="number of reference sub-windows")
    p.add_argument("--multiplier", type=float, help="cap = multiplier x max sub-window divergence")

    p = sub.add_parser("gen", help="write a seeded synthetic event stream")
    _common(p, "synthetic")
    p.add_argument("--out", type=Path, required=True, help="output file")
    p.add_argument("--format", choices=("csv", "jsonl"), help="output format (default: file suffix)")
    p.add_argument("--n-events", type=int, help="number of events")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("config", help="print the effective configuration as INI")
    _common(p, "default")
    return parser


def resolve_config(args: argparse.Namespace) -> Config:
    config = load_config(args.config, PRESETS[args.preset]())
    ex = config.experiment
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.window_days is not None:
        updates["window_days"] = args.window_days
    if getattr(args, "scenario", None):
        updates["scenarios"] = tuple(dict.fromkeys(["baseline", *args.scenario]))
    if getattr(args, "n_events", None) is not None:
        updates["n_events"] = args.n_events
    if updates:
        config = config.replace(experiment=dataclasses.replace(ex, **updates))
    cal = {}
    if getattr(args, "sub_windows", None) is not None:
        cal["sub_windows"] = args.sub_windows
    if getattr(args, "multiplier", None) is not None:
        cal["multiplier"] = args.multiplier
    if cal:
        config = config.replace(calibration=dataclasses.replace(config.calibration, mode="calibrated", **cal))
    return validate_config(config)


def _refuse_existing(args) -> None:
    """Fail before any work if ``--out`` already holds a report."""
    if args.out is None or args.overwrite or not args.out.is_dir():
        return
    names = {"summary.tsv", "summary.json", "rows.jsonl"}
    existing = [p for p in args.out.iterdir() if p.name in names or p.name.startswith("scenario_")]
    if existing:
        raise FileExistsError(f"{args.out} already holds a report (pass --overwrite to replace it)")


def _emit(report, args, text: str) -> None:
    if args.out is not None:
        for path in emit_report(report, args.out, overwrite=args.overwrite):
            logger.info("wrote %s", path)
    sys.stdout.write(text)


def cmd_monitor(args, config: Config) -> None:
    _refuse_existing(args)
    events = ingest(args.input, args.format, allow_unsorted=args.allow_unsorted)
    report = monitor_stream(events, config)
    _emit(report, args, scenario_table(report, "observed"))


def cmd_experiment(args, config: Config) -> None:
    _refuse_existing(args)
    events = ingest(args.input, args.format) if args.input else None
    report = run_experiment(config, events)
    _emit(report, args, summary_table(report))


def cmd_simulate(args, config: Config) -> None:
    trajectories = simulate_all(config, args.horizon)
    kinds = args.drift or list(DRIFT_TYPES)
    threshold = config.status.degraded_min
    days = [d for d in CHECKPOINT_DAYS if d <= len(trajectories[kinds[0]].steps)]
    out = sys.stdout
    out.write("\t".join(["drift", *(f"day_{d}" for d in days), "crossing_day"]) + "\n")
    for kind in kinds:
        traj = trajectories[kind]
        crossing = traj.crossing_days.get(threshold)
        cells = [f"{traj.score_at(d):.3f}" for d in days]
        out.write("\t".join([kind, *cells, "-" if crossing is None else str(crossing)]) + "\n")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        for kind in kinds:
            path = args.out / f"trajectory_{kind}.tsv"
            if path.exists() and not args.overwrite:
                raise FileExistsError(f"refusing to overwrite {path}")
            path.write_text(trajectory_table(trajectories[kind]), encoding="utf-8")
            logger.info("wrote %s", path)


def cmd_calibrate(args, config: Config) -> None:
    events = ingest(args.input, args.format)
    if not events:
        raise ValueError(f"{args.input}: no events")
    start = math.floor(events[0].t)
    window = MonitoringWindow(0, start, math.floor(events[-1].t) + 1.0, events)
    if not window.events.scored:
        sc = config.scorer
        model = train_logistic(window.features, window.labels, sc.learning_rate, sc.epochs, sc.l2)
        window = window.with_scores(predict_proba(model, window.features))
    config = config.replace(calibration=dataclasses.replace(config.calibration, mode="calibrated"))
    caps = ReferenceProfile.from_window(window, config).caps
    sys.stdout.write(
        "[caps]\n"
        + "".join(f"{f.name} = {getattr(caps, f.name)!r}\n" for f in dataclasses.fields(caps))
    )


def cmd_gen(args, config: Config) -> None:
    if args.out.exists() and not args.overwrite:
        raise FileExistsError(f"refusing to overwrite {args.out}")
    fmt = args.format or args.out.suffix.lstrip(".").lower()
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"cannot infer format from {args.out}, pass --format")
    events = synthetic_stream(config)
    export_events(events, args.out, fmt)
    logger.info("wrote %d events to %s", len(events), args.out)


def cmd_config(args, config: Config) -> None:
    sys.stdout.write(dumps_config(config))


COMMANDS = {
    "monitor": cmd_monitor,
    "experiment": cmd_experiment,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "gen": cmd_gen,
    "config": cmd_config,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = resolve_config(args)
        COMMANDS[args.command](args, config)
    except (ConfigError, IngestError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
