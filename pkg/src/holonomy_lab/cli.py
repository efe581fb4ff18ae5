"""``holonomy-lab`` command line.

Exit codes: 0 success, 1 invalid config, 2 numerical failure (including runs
that finished but marked rows as failed).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import experiments as ex
from .errors import HolonomyError, InvalidInputError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holonomy-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run the configured scenario"),
                        ("sweep", "run the configured decoherence sweep"),
                        ("synth", "write pulse schedules as CSV"),
                        ("validate", "check a config and print the resolved values")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="JSON config file, or '-' for stdin")
        s.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
        s.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        s.add_argument("--schedule", choices=["fixed-rate", "fixed-amplitude", "both"], default=None)
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "synth":
            s.add_argument("--samples", type=int, default=1001)
    return p


def _load(args) -> dict:
    text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text()
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ex.ConfigError([f"config is not valid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ex.ConfigError(["config must be a JSON object"])
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.schedule is not None:
        raw["schedule"] = args.schedule
    return raw


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ex.validate_config(_load(args))
    except ex.ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        print(json.dumps(cfg.raw, indent=2, sort_keys=True))
        return EXIT_OK
    try:
        if args.command == "synth":
            for path in ex.synth(cfg, args.samples):
                print(path)
            return EXIT_OK
        if args.command == "sweep":
            table = ex.sweep(cfg, args.jobs)
            Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
            dest = Path(cfg.output_dir) / f"{cfg.scenario}.csv"
            table.to_csv(dest)
        else:
            table = ex.run(cfg, args.jobs)
            dest = Path(cfg.output_dir) / f"{cfg.scenario}.csv"
    except ex.ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except HolonomyError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(dest)
    if table.failed:
        print("some rows are marked failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
