"""Command-line entry point: ``deltawave <mode> --config cfg.json``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .analysis import EXIT_CONFIG, EXIT_IO, MODES, ConfigError, parse_config, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deltawave", description="Two-channel point-coupling wave-packet experiments.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="JSON experiment description")
    ap.add_argument("--output-dir", help="overrides output_dir from the config")
    ap.add_argument("--quiet", action="store_true", help="only log errors")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    log = logging.getLogger("deltawave")
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        log.error("config is not valid JSON: %s", exc)
        return EXIT_CONFIG
    if isinstance(raw, dict):
        raw.setdefault("mode", args.mode)
        if raw["mode"] != args.mode:
            log.error("config mode %r disagrees with command-line mode %r", raw["mode"], args.mode)
            return EXIT_CONFIG
    try:
        cfg = parse_config(raw)
    except ConfigError as exc:
        for problem in exc.problems:
            log.error("config: %s", problem)
        return EXIT_CONFIG
    status = run(cfg, raw, args.output_dir)
    if status == 0:
        log.info("wrote results to %s", args.output_dir or cfg.output_dir)
    return status


if __name__ == "__main__":
    sys.exit(main())
