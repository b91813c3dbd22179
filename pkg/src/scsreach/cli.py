"""Command-line entry point: ``scsreach {solve,scs,compare,bench,slice,verify}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import app
from .config import load_config, parse_real
from .errors import ConfigError, NonFiniteField, ReachError, StepCapExceeded

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4


def _fixed(items) -> dict[int, float]:
    fixed = {}
    for item in items or []:
        dim, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected DIM=VALUE, got {item!r}", "--fix")
        try:
            fixed[int(dim)] = parse_real(value if "pi" in value else float(value), "--fix")
        except ValueError:
            raise ConfigError(f"expected DIM=VALUE, got {item!r}", "--fix") from None
    return fixed


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scsreach", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="full-dimensional reachable set")
    s.add_argument("config")

    s = sub.add_parser("scs", help="subsystem solves plus reconstruction")
    s.add_argument("config")

    s = sub.add_parser("compare", help="membership agreement of two fields")
    s.add_argument("field_a")
    s.add_argument("field_b")
    s.add_argument("--band", type=float, default=None, help="band half-width in value units")
    s.add_argument("--cells", type=float, default=2.0, help="band in grid cells when --band is absent")
    s.add_argument("-o", "--output")

    s = sub.add_parser("bench", help="time both pipelines over node counts")
    s.add_argument("config")
    s.add_argument("--counts", type=int, nargs="+")

    s = sub.add_parser("slice", help="fix dimensions of a field or manifest and emit CSV")
    s.add_argument("source")
    s.add_argument("--fix", action="append", metavar="DIM=VALUE")
    s.add_argument("--time", type=float, default=None)
    s.add_argument("-o", "--output", required=True)

    s = sub.add_parser("verify", help="run the verification suite")
    s.add_argument("config", nargs="?")
    s.add_argument("--fault", default=None, help="inject a known defect (test hook)")
    return p


def run(args) -> int:
    if args.command == "solve":
        report = app.cmd_solve(load_config(args.config))
    elif args.command == "scs":
        report = app.cmd_scs(load_config(args.config))
    elif args.command == "compare":
        band = args.band
        if band is None:
            from .fieldio import load_field

            band = args.cells * max(load_field(args.field_a).grid.spacing)
        report = app.cmd_compare(args.field_a, args.field_b, band, args.output)
    elif args.command == "bench":
        report = app.cmd_bench(load_config(args.config), args.counts)
    elif args.command == "slice":
        report = app.cmd_slice(args.source, _fixed(args.fix), args.output, args.time)
    else:
        config = load_config(args.config) if args.config else None
        report = app.cmd_verify(config, fault=args.fault)
        print(json.dumps(report, indent=2, default=app._json_default))
        return EXIT_OK if report["passed"] else EXIT_VERIFY
    summary = {k: v for k, v in report.items() if k not in ("config", "snapshots", "rows")}
    print(json.dumps(summary, indent=2, default=app._json_default))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return run(args)
    except (NonFiniteField, StepCapExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ReachError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
