"""Command-line interface.

Subcommands:
  solve <config>    solve one instance, write summary, traces, figure
  sweep <config>    run the seeded sweep harness, write CSVs and a figure
  verify <config>   sandwich the solve between independent oracle bounds
  selftest          run the built-in analytic and property checks
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config

__all__ = ["main"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shfplan",
        description="Optimal 1D hover-and-fly UAV trajectories for multi-node RF charging",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve one instance and write summary, traces and figure"),
        ("sweep", "run the sweep harness over seeded trials"),
        ("verify", "run the oracle sandwich around the solve"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the YAML experiment file")
    sub.add_parser("selftest", help="run built-in analytic and property checks")
    args = parser.parse_args(argv)

    from . import runner

    if args.command == "selftest":
        return 1 if runner.run_selftest() else 0
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "solve":
        runner.run_solve(cfg)
        return 0
    if args.command == "sweep":
        runner.run_sweep(cfg)
        return 0
    if args.command == "verify":
        result = runner.run_verify(cfg)
        return 0 if result["ok"] else 1
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
