"""Command-line entry point: ``irs-isac <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .config import PROFILES, ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

logger = logging.getLogger("irs_isac")

# subcommand -> method override and trial count override (None keeps the config's)
_SINGLE = {"radar": ("radar_only", 1), "solve": ("proposed", 1),
           "solve-robust": ("robust", 1), "sdr": ("sdr", 1)}


def _values(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, help="master seed (trial i uses seed + i)")
    common.add_argument("--profile", choices=PROFILES, default="desk")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="irs-isac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("radar", parents=[common],
                   help="design the desired covariance, emit its pattern")
    sub.add_parser("solve", parents=[common], help="one perfect-CSI joint solve")
    sub.add_parser("solve-robust", parents=[common], help="one worst-case robust solve")
    sub.add_parser("sdr", parents=[common], help="one bi-SDR benchmark solve")
    sw = sub.add_parser("sweep", parents=[common], help="sweep one axis")
    sw.add_argument("--axis", required=True, choices=sorted(harness.SWEEP_AXES))
    sw.add_argument("--values", required=True, type=_values)
    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo run of the configured method")
    mc.add_argument("--trials", type=int)
    return parser


def _config(args):
    config = load_config(args.config, args.profile)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.command in _SINGLE:
        changes["method"], changes["trials"] = _SINGLE[args.command]
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    return config.updated(changes) if changes else config


def _emit_run(summary, out):
    harness.emit(summary, out / "summary.json")
    harness.emit({"trials": summary.timings}, out / "timings.json")
    first = next((p for p in summary.patterns if p is not None), None)
    if first is not None:
        harness.emit(first, out / "pattern.csv")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
        if args.command == "sweep":
            configs = [harness.sweep_config(config, args.axis, v) for v in args.values]
    except ConfigError as err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "sweep":
            summaries = [harness.run(c) for c in configs]
            harness.emit(harness.sweep_document(args.axis, args.values, summaries),
                         args.out / "sweep.json")
            for value, summary in zip(args.values, summaries):
                sub = args.out / f"{args.axis}_{value:g}"
                sub.mkdir(exist_ok=True)
                _emit_run(summary, sub)
            infeasible = all(s.all_infeasible for s in summaries)
        else:
            summary = harness.run(config)
            _emit_run(summary, args.out)
            infeasible = summary.all_infeasible
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    if infeasible:
        print("every trial was infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
