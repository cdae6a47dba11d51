"""Command-line front end for the experiment harness.

Subcommands map one-to-one onto harness operations:

* ``run <config.json>``      scaling grid, writes results.csv + summary.json
* ``compare <config.json>``  scheme comparison on one dataset, writes compare.csv
* ``figure6 --out <path>``   joint log-density surface of the heavy-tailed chain
* ``validate``               brute-force conditional checks, pass/fail table

Exit codes: 0 success, 1 a validation or self-check failure, 2 a config
problem, 3 a runtime failure inside a model or chain.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import harness
from .errors import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbslab",
        description="Gibbs-sampling laboratory for comparing model parametrizations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: hardware threads)")
        p.add_argument("--out-dir", default=None,
                       help="output base directory (overrides the config)")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides the config)")

    run_p = sub.add_parser("run", help="run the scaling grid of a config")
    run_p.add_argument("config", help="path to the experiment JSON")
    common(run_p)

    cmp_p = sub.add_parser("compare", help="compare schemes head to head on one dataset")
    cmp_p.add_argument("config", help="path to the experiment JSON")
    common(cmp_p)

    fig_p = sub.add_parser("figure6", help="write the heavy-tailed joint density grid")
    fig_p.add_argument("--out", required=True, help="output CSV path")
    common(fig_p)

    val_p = sub.add_parser("validate", help="run the fast brute-force check table")
    common(val_p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = harness.load_config(args.config)
            target = harness.cmd_run(
                cfg, threads=args.threads, out_dir=args.out_dir, seed=args.seed
            )
            print(f"wrote {target / 'results.csv'}")
            print(f"wrote {target / 'summary.json'}")
            return 0
        if args.command == "compare":
            cfg = harness.load_config(args.config)
            target = harness.cmd_compare(
                cfg, threads=args.threads, out_dir=args.out_dir, seed=args.seed
            )
            print(f"wrote {target / 'compare.csv'}")
            return 0
        if args.command == "figure6":
            code = harness.cmd_figure6(args.out)
            print(f"wrote {args.out}")
            return code
        return harness.cmd_validate(seed=0 if args.seed is None else args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: anything else is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
