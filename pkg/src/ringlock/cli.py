"""Command-line entry point: ``ringlock <scenario> [options]``.

Exit codes: 0 success, 2 configuration error, 3 simulation divergence,
4 fit failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from ringlock.config import ConfigError, load_config, set_by_path, validate_config
from ringlock.scenarios import SCENARIOS, FitError, ScenarioError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_FIT = 4


def _parse_set(expr: str) -> tuple[str, object]:
    if "=" not in expr:
        raise ConfigError(f"--set expects path=value, got {expr!r}")
    path, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings allowed without quotes
    return path, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringlock",
        description="Co-simulation scenarios for feedback-locked microring pair sources",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in SCENARIOS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--config", help="JSON config file (defaults used if omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default=f"out/{name}", help="output directory")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="PATH=VALUE",
            help="override a config leaf by dotted path (repeatable)",
        )

    v = sub.add_parser("validate-config", help="validate a config file against the schema")
    v.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-config":
            cfg = load_config(args.config)
            validate_config(cfg)
            print(f"{args.config}: valid")
            return EXIT_OK
        cfg = load_config(args.config)
        for expr in args.set:
            path, value = _parse_set(expr)
            cfg = set_by_path(cfg, path, value)
        if args.seed is not None:
            cfg["seed"] = args.seed
        validate_config(cfg)
        SCENARIOS[args.command](cfg, args.out, seed=cfg["seed"])
        print(f"{args.command}: wrote outputs to {args.out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"simulation divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
