"""Command-line entry point: ``hqmkit {simulate,train,sweep,validate}``.

On failure a single JSON line ``{"error": <type>, "message": <text>}`` goes to
stderr and the exit code is nonzero (2 for configuration problems, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hqmkit.errors import ConfigError, CsvFormatError, HqmError
from hqmkit.experiments import PRESETS, config_from_mapping, load_config, run_experiment


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, 2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hqmkit", description="Hybrid queuing model toolkit for platooned bottlenecks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "simulate": "generate ground-truth counts and the fixed-parameter model prediction",
        "train": "train the model online against ground-truth counts",
        "sweep": "train, compute the optimal headway and sweep delay over headways",
        "validate": "score fixed parameters against a counts CSV or a simulated source",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", type=Path, help="flat JSON config file")
        p.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--scenario", choices=sorted(PRESETS), help="scenario preset (overrides the config)")
        if name == "train":
            p.add_argument("--mode", choices=("stationary", "nonstationary"), help="cost used by the trainer")
    return parser


def _fail(kind: str, message: str, code: int):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    sys.exit(code)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(name)s: %(message)s")
    kind = args.command
    if kind == "train":
        kind = f"train-{args.mode}" if args.mode else "train"
    try:
        if args.config is not None:
            cfg = load_config(args.config, kind, args.seed, args.out)
            if args.scenario:
                raise ConfigError("--scenario cannot be combined with --config; set 'scenario' in the file")
        else:
            values = {"scenario": args.scenario} if args.scenario else {}
            cfg = config_from_mapping(values, kind, args.seed, args.out)
        report = run_experiment(cfg)
    except ConfigError as exc:
        _fail("ConfigError", str(exc), 2)
    except (HqmError, OSError) as exc:
        kind_name = "CsvFormatError" if isinstance(exc, CsvFormatError) else type(exc).__name__
        _fail(kind_name, str(exc), 1)
    summary = report.summary()
    summary["wall_seconds"] = round(report.wall_seconds, 3)
    summary["out"] = str(cfg.out_dir)
    summary["files"] = report.files
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
