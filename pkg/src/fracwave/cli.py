"""Command-line entry point.

Subcommands map onto the config modes:

    fracwave rates        --config cfg.txt --out DIR      (mode rate_table)
    fracwave run          --config cfg.txt --out DIR      (mode semilinear_run)
    fracwave verify-linear --config cfg.txt --out DIR     (mode linear_verify)
    fracwave testfn       --config cfg.txt --out DIR      (mode testfn_diagnostic)
    fracwave lemma        --config cfg.txt --out DIR      (mode lemma_check)

--set key=value (repeatable) overrides config fields; --out falls back to the
FRACWAVE_OUT environment variable.  Exit 0 on success (and verdict matching
`expect` when present), 2 on verdict mismatch, 1 on any error.
"""

import argparse
import os
import sys

from .config import ConfigError, _parse_value
from .harness import run_paths

_SUBCOMMANDS = {
    "rates": "rate_table",
    "run": "semilinear_run",
    "verify-linear": "linear_verify",
    "testfn": "testfn_diagnostic",
    "lemma": "lemma_check",
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="fracwave", description=__doc__.splitlines()[0])
    from . import __version__
    parser.add_argument("--version", action="version", version=f"fracwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, mode in _SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"run configs in mode {mode}")
        sp.add_argument("--config", action="append", required=True,
                        help="config file (repeatable)")
        sp.add_argument("--out", default=None,
                        help="output directory (default: $FRACWAVE_OUT)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (repeatable)")
        sp.add_argument("--jobs", type=int, default=1, help="worker pool size")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = args.out or os.environ.get("FRACWAVE_OUT")
    if not out_dir:
        print("error: --out or FRACWAVE_OUT required", file=sys.stderr)
        return 1
    overrides = {"mode": _SUBCOMMANDS[args.command]}
    for item in args.set:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 1
        key, _, value = item.partition("=")
        overrides[key.strip()] = _parse_value(value)
    try:
        results = run_paths(args.config, out_dir, overrides=overrides, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: report, exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for res in results:
        print(f"{res.name}: {res.verdict} -> {res.csv_path}")
    return max((r.exit_code for r in results), default=0)


if __name__ == "__main__":
    raise SystemExit(main())
