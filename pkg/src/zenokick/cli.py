"""Command line entry: ``zenokick run <config>`` and ``zenokick validate <config>``.

Exit status is nonzero exactly when an error is reported; warnings go to
stderr and never change the status.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .kickedmap import BasisOverflowError
from .runner import run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zenokick",
        description="Batch runner for quantum dynamics under repeated measurement",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment from a config file")
    p_run.add_argument("config", help="path to a YAML run configuration")
    p_validate = sub.add_parser("validate", help="check a config file without running it")
    p_validate.add_argument("config", help="path to a YAML run configuration")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)

    if args.command == "validate":
        print(json.dumps(cfg.to_mapping(), indent=2, sort_keys=True))
        return 0

    try:
        result = run_experiment(cfg)
    except BasisOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return 1

    for path in result.series_paths:
        print(path)
    if result.meta_path is not None:
        print(result.meta_path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
