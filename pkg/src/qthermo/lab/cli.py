"""Command line entry point: ``qthermo run`` and ``qthermo presets``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .presets import PRESETS
from .runner import run_experiment

EXIT_OK, EXIT_IDENTITY_FAILURE, EXIT_CONFIG = 0, 1, 2


def _run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(text)
    except ConfigError as exc:
        where = f" (field {exc.field})" if exc.field else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    manifest = run_experiment(cfg, args.out)
    failed = [c for c in manifest.identities if not c.passed]
    for c in failed:
        print(f"FAIL {c.name}: residual {c.residual:.3e} > {c.tolerance:.0e}", file=sys.stderr)
    for e in manifest.errors:
        print(f"ERROR {e}", file=sys.stderr)
    n = len(manifest.identities)
    print(f"{n - len(failed)}/{n} identities within tolerance; outputs in {args.out or cfg.output_dir}")
    return EXIT_OK if manifest.passed else EXIT_IDENTITY_FAILURE


def _presets(_args) -> int:
    width = max(map(len, PRESETS))
    for name, desc in PRESETS.items():
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="qthermo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(func=_run)
    sub.add_parser("presets", help="list state presets").set_defaults(func=_presets)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
