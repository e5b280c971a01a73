#!/usr/bin/env python

"""
Run core classes
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os
from pathlib import Path
import warnings

import numpy as np
import pandas as pd

from . import bcg, utils
from .bounds import bound_series, radau_sequence
from .condition import CONDITION, load_experiments
from .const import Default, ExitCode, Experiment, StrPath, Tol
from .errors import BcgError, BoundsWarning, SolverError
from .lanczos import certify_shift
from .matrix_io import (
    ProblemInstance,
    dense_reference_solve,
    poisson2d,
    poisson2d_eigenvalues,
    random_rhs,
    read_matrix_market,
)


MATRIX_DIR_ENV = "BCGBOUNDS_MATRIX_DIR"


def matrix_dir() -> Path:
    return Path(os.environ.get(MATRIX_DIR_ENV, CONDITION.dirs.matrices))


def load_problem(
    poisson: int | None = None,
    matrix: StrPath | None = None,
    m: int = Default.BLOCK_SIZE,
    seed: int = Default.SEED,
    lambda_min_hint: float | None = None,
) -> ProblemInstance:
    """Poisson mesh or Matrix Market file with seeded uniform right-hand sides.

    A Poisson problem carries its analytic smallest eigenvalue as the hint.
    """
    if matrix is not None:
        A = read_matrix_market(matrix)
        name = Path(matrix).stem
    else:
        mesh = Default.MESH if poisson is None else poisson
        A = poisson2d(mesh)
        name = f"poisson{mesh}"
        if lambda_min_hint is None:
            lambda_min_hint = float(poisson2d_eigenvalues(mesh)[0])
    B = random_rhs(A.n, m, seed)
    X_true = dense_reference_solve(A, B) if A.n <= Default.DENSE_LIMIT else None
    return ProblemInstance(
        A=A, B=B, X_true=X_true, lambda_min_hint=lambda_min_hint, name=name
    )


@dataclass
class Run:
    problem: ProblemInstance
    config: bcg.SolverConfig = field(default_factory=bcg.SolverConfig)
    mu_auto: bool = field(default=False)
    result: bcg.SolveResult = field(init=False, repr=False)
    error: str | None = field(default=None, init=False)
    true_err: np.ndarray | None = field(default=None, init=False, repr=False)
    _res2d: pd.DataFrame = field(init=False, repr=False)

    def __post_init__(self) -> None:
        # true errors need every iterate
        self.config.archive = self.problem.X_true is not None
        hint = self.problem.lambda_min_hint
        if self.config.mu is not None and hint is not None and self.config.mu >= hint:
            warnings.warn(
                f"mu={self.config.mu:.6g} is not below lambda_min={hint:.6g}; "
                "upper bounds are not guaranteed",
                BoundsWarning,
            )

    def solve(self) -> bcg.SolveResult:
        if not hasattr(self, "result"):
            try:
                self.result = bcg.solve(self.problem.A, self.problem.B, config=self.config)
            except SolverError as e:
                self.result = e.result
                self.error = str(e)
            if self.mu_auto:
                self.set_mu_auto()
            if self.problem.X_true is not None and self.result.X_archive:
                self.true_err = utils.true_error_norms(
                    self.problem.A, self.problem.X_true, self.result.X_archive
                )
        return self.result

    def set_mu_auto(self) -> None:
        """Gauss-Radau bounds after the fact with mu certified on T_K."""
        history = self.result.history
        try:
            mu = certify_shift(bcg.coefficient_bridge(history))
            radau = radau_sequence(history, mu)
        except BcgError as e:
            warnings.warn(f"mu could not be certified: {e}", BoundsWarning)
            return
        warnings.warn(
            f"mu={mu:.6g} is below the smallest Ritz value only, "
            "not certified against the spectrum of A",
            BoundsWarning,
        )
        self.config.mu = mu
        self.result.radau_series = radau
        self.result.bounds = bound_series(history, radau, self.config.delay)

    @property
    def exit_code(self) -> ExitCode:
        self.solve()
        if self.error is not None:
            return ExitCode.SOLVER_ERROR
        return ExitCode.OK if self.result.converged else ExitCode.MAX_ITER

    def set_res2d(self) -> None:
        if not hasattr(self, "_res2d"):
            self.solve()
            self._res2d = self.result.bounds.to_frame(self.true_err)

    @property
    def res2d(self) -> pd.DataFrame:
        self.set_res2d()
        return self._res2d

    def summary(self) -> dict:
        self.solve()
        bounds = self.result.bounds
        last = np.flatnonzero(~np.isnan(bounds.lower_sq[:, 0])) if bounds.iterations else []
        final = {}
        if len(last):
            t = int(last[-1])
            final = {
                "iter": t,
                "gauss_lb": bounds.gauss_lower[t].tolist(),
                "radau_ub": None
                if np.isnan(bounds.upper_sq[t]).any()
                else bounds.radau_upper[t].tolist(),
            }
        return {
            "problem": {
                "name": self.problem.name,
                "n": self.problem.n,
                "m": self.problem.m,
            },
            "config": {
                "variant": self.config.variant.name,
                "sigma": self.config.sigma_policy.name,
                "max_iter": self.config.max_iter,
                "tol": float(self.config.stop_tol),
                "mu": None if self.config.mu is None else float(self.config.mu),
                "mu_auto": self.mu_auto,
                "delay": self.config.delay,
                "recompute_interval": self.config.recompute_interval,
            },
            "iterations": self.result.iterations,
            "converged": self.result.converged,
            "stagnation_index": self.result.stagnation_index,
            "monitor_onset": bounds.monitor.onset,
            "final_bounds": final,
            "error": self.error,
            "exit_code": int(self.exit_code),
        }

    def save(self, output: StrPath | None = None) -> None:
        """CSV to `output` (stdout if None) and `<output>.summary.yaml` next to it."""
        if output is None:
            utils.write_csv(self.res2d)
            return
        output = Path(output)
        output.parent.mkdir(exist_ok=True, parents=True)
        utils.write_csv(self.res2d, output)
        utils.write_summary(self.summary(), output.with_suffix(".summary.yaml"))


def companion_cg(
    problem: ProblemInstance, max_iter: int, column: int = 0
) -> np.ndarray:
    """Relative A-norm errors of scalar CG on one column of B."""
    config = bcg.SolverConfig(
        max_iter=max_iter, stop_tol=Tol.FLOOR, use_bounds=False, archive=True
    )
    b = problem.B[:, [column]]
    try:
        result = bcg.solve(problem.A, b, config=config)
    except SolverError as e:
        result = e.result
    err = utils.true_error_norms(
        problem.A, problem.X_true[:, [column]], result.X_archive
    )[:, 0]
    return err / max(err[0], Tol.FLOOR)


@dataclass
class ExperimentRun:
    experiment: Experiment = field(default=Experiment.poisson)
    outdir: StrPath = field(default=None)
    matrices: StrPath = field(default=None)
    max_iter: int | None = field(default=None)
    settings: dict = field(init=False, repr=False)
    run: Run = field(init=False, repr=False)
    cg_iterations: int | None = field(default=None, init=False)

    def __post_init__(self) -> None:
        self.settings = load_experiments()[self.experiment.name]
        self.outdir = Path(CONDITION.dirs.result if self.outdir is None else self.outdir)
        self.matrices = matrix_dir() if self.matrices is None else Path(self.matrices)
        s = self.settings
        problem = load_problem(
            poisson=s.get("mesh"),
            matrix=None if s.get("file") is None else self.matrices.joinpath(s.file),
            m=s.m,
            seed=s.seed,
            lambda_min_hint=s.lambda_min,
        )
        config = bcg.SolverConfig(
            variant=s.variant,
            max_iter=s.max_iter if self.max_iter is None else self.max_iter,
            stop_tol=s.tol,
            mu=s.mu,
            delay=s.delay,
            recompute_interval=s.recompute_interval,
            stop_on_stagnation=s.stop_on_stagnation,
        )
        self.run = Run(problem=problem, config=config)

    def solve(self) -> None:
        if self.settings.get("companion_cg") and self.run.problem.X_true is not None:
            with ThreadPoolExecutor(max_workers=2) as executor:
                cg_future = executor.submit(
                    companion_cg, self.run.problem, self.settings.cg_max_iter
                )
                executor.submit(self.run.solve).result()
                cg_err = cg_future.result()
            self.set_cg_iterations(cg_err)
        else:
            self.run.solve()

    def set_cg_iterations(self, cg_err: np.ndarray) -> None:
        """CG iterations needed to reach BCG's relative error at its stagnation flag."""
        err = self.run.true_err[:, 0]
        idx = self.run.result.stagnation_index
        idx = len(err) - 1 if idx is None else min(idx, len(err) - 1)
        self.cg_iterations = utils.first_index_below(cg_err, err[idx] / err[0])

    def save(self) -> Path:
        self.solve()
        self.outdir.mkdir(exist_ok=True, parents=True)
        name = self.experiment.name
        csv_path = self.outdir.joinpath(f"{name}.csv")
        utils.write_csv(self.run.res2d, csv_path)
        summary = self.run.summary() | {
            "experiment": name,
            "lambda_min": float(self.run.problem.lambda_min_hint),
            "companion_cg_iterations": self.cg_iterations,
        }
        utils.write_summary(summary, self.outdir.joinpath(f"{name}.summary.yaml"))
        with open(self.outdir.joinpath(f"{name}.gp"), "w", newline="\n") as f:
            f.write(utils.gnuplot_script(csv_path.name, self.experiment.value))
        return csv_path
