"""Command-line entry point.

    dpre2d clt-check --N 64,512 --beta-hat 0.5 --replicates 2000 --out runs/clt
    dpre2d oracle --N 32768 --M 32 --beta-hat 0.5 --out runs/oracle
    dpre2d simulate --config moments.cfg --workers 4

On success the run manifest is printed as JSON and the exit code is 0.  On
failure a JSON object with an ``error`` key is printed and the exit code is
2 for an invalid config, 1 otherwise.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import KINDS, ConfigError, ExperimentConfig, parse_config_text
from .runner import run

SUBCOMMANDS = {
    "tables": "tables",
    "simulate": None,  # kind comes from --kind or the config file
    "oracle": "oracle",
    "clt-check": "clt",
    "decouple-check": "decouple",
    "taylor-check": "taylor",
    "supercritical": "supercritical",
}


def _add_common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--replicates", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--N", help="comma-separated horizons")
    p.add_argument("--M", help="comma-separated window counts")
    p.add_argument("--beta-hat", dest="beta_hat", help="comma-separated beta_hat values")
    p.add_argument("--family", choices=["gaussian", "rademacher"])
    p.add_argument("--eps0", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="dpre2d", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        if name == "simulate":
            p.add_argument("--kind", choices=KINDS)
    return parser


_OVERRIDES = ("master_seed", "replicates", "workers", "out", "N", "M", "beta_hat",
              "family", "eps0", "alpha", "delta")


def config_from_args(args) -> ExperimentConfig:
    mapping = {}
    if args.config:
        try:
            with open(args.config) as fh:
                mapping = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
    for key in _OVERRIDES:
        val = getattr(args, key, None)
        if val is not None:
            mapping[key] = val
    kind = SUBCOMMANDS[args.command] or getattr(args, "kind", None) or mapping.get("kind")
    if kind is None:
        raise ConfigError("kind", "simulate needs --kind or a kind line in the config")
    if SUBCOMMANDS[args.command] and mapping.get("kind", kind) != kind:
        raise ConfigError("kind", f"config kind {mapping['kind']!r} conflicts with "
                                  f"subcommand {args.command}")
    mapping["kind"] = kind
    return ExperimentConfig.from_mapping(mapping)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        manifest = run(cfg)
    except ConfigError as exc:
        print(json.dumps(exc.to_dict()))
        return 2
    except Exception as exc:
        err = exc.to_dict() if hasattr(exc, "to_dict") else {
            "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err))
        return 1
    print(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
