"""``hetsim`` command line."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, InvalidParameter, LayoutExhausted
from .config import REGISTRY, ExperimentConfig, parse_config
from .presets import PRESETS, all_schemes

EXIT_OK, EXIT_CONFIG, EXIT_LAYOUT = 0, 2, 3


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _add_run_args(p: argparse.ArgumentParser, preset_default=None) -> None:
    p.add_argument("--preset", default=preset_default)
    p.add_argument("--scheme")
    p.add_argument("--config", help="flat 'key = value' file")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--drops", type=int)
    p.add_argument("--slots", type=int)
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int, default=1, help="parallel drop workers (results do not change)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetsim")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="run one experiment"))
    _add_run_args(sub.add_parser("sweep", help="run the efficiency sweep"), "green_sweep")
    ls = sub.add_parser("list", help="list presets, schemes or config keys")
    ls.add_argument("what", choices=("presets", "schemes", "keys"))
    return ap


def _config_from_args(args) -> ExperimentConfig:
    overrides, run = parse_config(args.config) if args.config else ({}, {})
    preset = args.preset or run.get("preset")
    if preset is None:
        raise ConfigError("no preset given (use --preset or run.preset)", "run.preset")
    return ExperimentConfig(
        preset=preset,
        scheme=args.scheme or run.get("scheme"),
        overrides=overrides,
        drops=args.drops if args.drops is not None else run.get("drops"),
        slots=args.slots if args.slots is not None else run.get("slots"),
        master_seed=args.seed if args.seed is not None else run.get("seed", 0),
        out=args.out,
    )


def _list(what: str) -> None:
    if what == "presets":
        for p in PRESETS.values():
            print(f"{p.name:16s} schemes={','.join(p.schemes):24s} {p.description}")
    elif what == "schemes":
        for s in all_schemes():
            owners = [p.name for p in PRESETS.values() if s in p.schemes]
            print(f"{s:10s} {', '.join(owners)}")
    else:
        for k in REGISTRY.values():
            print(f"{k.name:28s} {k.kind:6s} default={k.default!r:12}  {k.help}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list":
        _list(args.what)
        return EXIT_OK
    from .runner import run_experiment

    try:
        cfg = _config_from_args(args)
        if args.command == "sweep" and cfg.preset != "green_sweep":
            raise ConfigError("sweep only runs the green_sweep preset", "run.preset")
        report = run_experiment(cfg, workers=args.workers)
    except (ConfigError, InvalidParameter) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except LayoutExhausted as e:
        print(f"layout error: {e}", file=sys.stderr)
        return EXIT_LAYOUT
    print(f"{report.preset}/{report.scheme}: {report.drops_run} drops run, {report.drops_skipped} skipped")
    for f in report.files:
        print(f"  wrote {f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
