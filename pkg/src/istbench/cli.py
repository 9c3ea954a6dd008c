"""``istbench <experiment> --config <path> [--seed n] [--out path] [--format csv|json]``

Exit codes: 0 success, 2 configuration error, 3 I/O error.  ``ISTBENCH_OUTPUT_DIR``
redirects the output file into another directory (file name kept).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .harness import EXPERIMENTS, FORMATS, ConfigError, emit_table, load_config, run_experiment

log = logging.getLogger("istbench")

EXIT_CONFIG = 2
EXIT_IO = 3
OUTPUT_DIR_ENV = "ISTBENCH_OUTPUT_DIR"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="istbench", description="Run a testbench experiment from a config file")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="YAML experiment config")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="output path ('-' for stdout)")
    ap.add_argument("--format", choices=FORMATS, help="override the config output format")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _output_path(out):
    if out is None or out == "-":
        return None
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        return Path(env_dir) / Path(out).name
    return Path(out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.experiment)
        overrides = {k: v for k, v in (("seed", args.seed), ("out", args.out), ("format", args.format))
                     if v is not None}
        cfg = dataclasses.replace(cfg, **overrides)
        table = run_experiment(cfg)
    except ConfigError as exc:
        print(f"istbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"istbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"istbench: {exc}", file=sys.stderr)
        return EXIT_IO

    path = _output_path(cfg.out)
    try:
        text = emit_table(table, cfg.format, path)
    except OSError as exc:
        print(f"istbench: {exc}", file=sys.stderr)
        return EXIT_IO
    if path is None:
        sys.stdout.write(text)
    else:
        log.info("wrote %d rows to %s", len(table.rows), path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
