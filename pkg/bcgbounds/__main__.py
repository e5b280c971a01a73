#!/usr/bin/env python

import argparse
import sys
import warnings

from . import parser
from .bcg import SolverConfig
from .condition import CONDITION, apply_overrides, reset_condition, set_condition
from .const import Check, ExitCode, Experiment
from .core import ExperimentRun, Run, load_problem
from .errors import (
    BadHeader,
    BcgError,
    BoundsWarning,
    MissingMatrixFile,
    NonSquare,
    NotSymmetric,
    PatternOrComplexUnsupported,
)
from .linalg import smallest_eigenvalue
from .utils import write_csv
from .verify import build_archival_run, render, run_suite


def _problem() -> dict:
    p = CONDITION.problem
    return {"poisson": p.poisson, "matrix": p.matrix, "m": p.m, "seed": p.seed}


def solve(args: argparse.Namespace) -> ExitCode:
    s = CONDITION.solver
    print("Loading problem...", file=sys.stderr)
    problem = load_problem(**_problem())
    config = SolverConfig(
        variant=s.variant,
        max_iter=s.max_iter,
        stop_tol=s.tol,
        mu=None if s.mu_auto else s.mu,
        delay=s.delay,
        sigma_policy=s.sigma,
        recompute_interval=s.recompute_interval,
    )
    run = Run(problem=problem, config=config, mu_auto=s.mu_auto)
    print(
        f"Solving {problem.name} (n={problem.n}, m={problem.m}) "
        f"with {config.variant.value}...",
        file=sys.stderr,
    )
    run.solve()
    print(
        f"{run.result.iterations} iterations, converged={run.result.converged}, "
        f"stagnation={run.result.stagnation_index}",
        file=sys.stderr,
    )
    if run.error:
        print(f"solver error: {run.error}", file=sys.stderr)
    run.save(args.out)
    return run.exit_code


def verify(args: argparse.Namespace) -> ExitCode:
    s = CONDITION.solver
    problem = load_problem(**_problem())
    mu = s.mu
    if mu is None:
        lam = problem.lambda_min_hint
        mu = 0.5 * (smallest_eigenvalue(problem.A) if lam is None else lam)
    print(f"Verifying on {problem.name} (n={problem.n}, m={problem.m}, mu={mu:.6g})...")
    run = build_archival_run(
        problem,
        iterations=args.iterations,
        mu=mu,
        variant=s.variant,
        sigma_policy=s.sigma,
        reorthogonalize=s.reorth,
    )
    checks = (
        None if args.check is None else [Check[c.replace("-", "_")] for c in args.check]
    )
    reports = run_suite(run, checks=checks, seeds=args.seeds)
    table = render(reports)
    print(table.to_string(index=False))
    if args.csv:
        write_csv(table[["check", "deviation", "tolerance", "pass"]], args.csv)
    if not s.reorth:
        print("report-only mode (--no-reorth): deviations are not enforced")
        return ExitCode.OK
    failed = [r for r in reports if r.enforced and not r.passed]
    return ExitCode.VERIFY_FAILED if failed else ExitCode.OK


def reproduce(args: argparse.Namespace) -> ExitCode:
    try:
        experiment = ExperimentRun(
            experiment=Experiment[args.experiment],
            outdir=args.outdir,
            matrices=args.matrix_dir,
            max_iter=args.max_iter,
        )
    except MissingMatrixFile as e:
        warnings.warn(f"{e}; supply it with --matrix-dir", BoundsWarning)
        return ExitCode.IO
    print(f"Reproducing {experiment.experiment.value}...")
    csv_path = experiment.save()
    result = experiment.run.result
    print(
        f"{result.iterations} iterations, stagnation={result.stagnation_index}, "
        f"written to {csv_path}"
    )
    if experiment.cg_iterations is not None:
        print(f"scalar CG on column 1 needs {experiment.cg_iterations} iterations")
    return experiment.run.exit_code


def main(argv: list[str] | None = None) -> int:
    reset_condition()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        for cnd in args.condition:
            set_condition(cnd)
        if args.command in ("solve", "verify"):
            apply_overrides(
                {
                    "problem": {
                        "poisson": args.poisson,
                        "matrix": None if args.matrix is None else str(args.matrix),
                        "m": args.m,
                        "seed": args.seed,
                    },
                    "solver": {
                        "mu": args.mu,
                        "variant": args.variant,
                        "sigma": args.sigma,
                        "delay": getattr(args, "delay", None),
                        "max_iter": getattr(args, "max_iter", None),
                        "tol": getattr(args, "tol", None),
                        "mu_auto": getattr(args, "mu_auto", None),
                        "recompute_interval": getattr(args, "recompute_interval", None),
                        "reorth": getattr(args, "reorth", None),
                    },
                }
            )
        match args.command:
            case "solve":
                return int(solve(args))
            case "verify":
                return int(verify(args))
            case "reproduce":
                return int(reproduce(args))
    except (MissingMatrixFile, OSError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return int(ExitCode.IO)
    except (BadHeader, NonSquare, NotSymmetric, PatternOrComplexUnsupported) as e:
        print(f"cannot read matrix: {e}", file=sys.stderr)
        return int(ExitCode.IO)
    except (BcgError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return int(ExitCode.SOLVER_ERROR)
    return int(ExitCode.USAGE)


if __name__ == "__main__":
    sys.exit(main())
