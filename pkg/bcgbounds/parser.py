#!/usr/bin/env python

"""
Parse command-line arguments.
"""

import argparse
from pathlib import Path
import sys

from .const import Check, ExitCode, Experiment, SigmaPolicy, Variant


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with `ExitCode.USAGE` instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-c",
        "--condition",
        nargs="*",
        type=Path,
        default=[],
        help="file path(s) of run conditions (YAML), merged in order",
    )
    problem = parser.add_mutually_exclusive_group()
    problem.add_argument("--matrix", type=Path, help="Matrix Market file of A")
    problem.add_argument(
        "--poisson", type=int, metavar="K", help="5-point Poisson matrix on a K x K mesh"
    )
    parser.add_argument("--m", type=int, help="block size (number of right-hand sides)")
    parser.add_argument("--seed", type=int, help="seed of the right-hand sides")
    parser.add_argument("--mu", type=float, help="Gauss-Radau node below lambda_min(A)")
    parser.add_argument(
        "--variant", choices=[v.name for v in Variant], help="BCG variant"
    )
    parser.add_argument(
        "--sigma",
        choices=[s.name for s in SigmaPolicy],
        help="scaling policy of O'Leary BCG",
    )
    parser.add_argument(
        "--reorth",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="reorthogonalize the Lanczos companion of `verify` "
        "(--no-reorth: report only)",
    )


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments when executed with module options.

    Returns:
        argparse.Namespace: parse results.
    """
    arg_parser = ArgumentParser(
        prog="bcgbounds",
        description="Block CG with Gauss and Gauss-Radau bounds on A-norm errors.",
    )
    subparsers = arg_parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", help="solve A X = B and write bound history")
    _add_common(solve)
    solve.add_argument("--delay", type=int, help="delay d >= 1 of the bounds")
    solve.add_argument("--max-iter", type=int, help="maximum number of iterations")
    solve.add_argument("--tol", type=float, help="stopping tolerance")
    solve.add_argument(
        "--mu-auto",
        action="store_true",
        default=None,
        help="certify mu below the smallest Ritz value (not below lambda_min(A))",
    )
    solve.add_argument(
        "--recompute-interval",
        type=int,
        help="compare recursive and true residuals every N iterations",
    )
    solve.add_argument("-o", "--out", type=Path, help="CSV output (stdout if omitted)")

    verify = subparsers.add_parser("verify", help="run the verification suite")
    _add_common(verify)
    verify.add_argument("--iterations", type=int, help="iterations of the archival run")
    verify.add_argument(
        "--check",
        action="append",
        choices=[c.name.replace("_", "-") for c in Check],
        help="run only this check (repeatable)",
    )
    verify.add_argument(
        "--seeds", type=int, default=100, help="random pairs for the inverse lemma"
    )
    verify.add_argument("--csv", type=Path, help="also write the report as CSV")

    reproduce = subparsers.add_parser("reproduce", help="reproduce an experiment")
    reproduce.add_argument("experiment", choices=[e.name for e in Experiment])
    reproduce.add_argument(
        "-c", "--condition", nargs="*", type=Path, default=[], help="run conditions"
    )
    reproduce.add_argument("--outdir", type=Path, help="output directory")
    reproduce.add_argument(
        "--matrix-dir", type=Path, help="directory holding the SuiteSparse .mtx files"
    )
    reproduce.add_argument("--max-iter", type=int, help="override the iteration limit")

    args = arg_parser.parse_args(argv)
    if getattr(args, "delay", None) is not None and args.delay < 1:
        arg_parser.error("--delay must be >= 1")
    if getattr(args, "m", None) is not None and args.m < 1:
        arg_parser.error("--m must be >= 1")
    if getattr(args, "mu", None) is not None and not args.mu > 0:
        arg_parser.error("--mu must be positive")
    return args
