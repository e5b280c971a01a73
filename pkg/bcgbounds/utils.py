#!/usr/bin/env python

"""
useful functions for run artifacts
"""

import sys
from typing import IO

import numpy as np
from omegaconf import OmegaConf
import pandas as pd

from .bounds import true_error_matrix
from .const import BlockVector, StrPath
from .linalg import SparseSpd


def write_csv(df: pd.DataFrame, output: StrPath | IO[str] | None = None) -> None:
    """LF line endings, 17 significant digits, empty cells for missing values."""
    df.to_csv(
        sys.stdout if output is None else output,
        index=False,
        lineterminator="\n",
        float_format="%.17g",
        na_rep="",
    )


def write_summary(summary: dict, output: StrPath) -> None:
    OmegaConf.save(OmegaConf.create(summary), output)


def true_error_norms(
    A: SparseSpd, X_true: BlockVector, X_archive: list[BlockVector]
) -> np.ndarray:
    """Column A-norm errors of every archived iterate, one row per iteration."""
    return np.sqrt(
        np.clip(
            [np.diag(true_error_matrix(A, X_true, X)) for X in X_archive], 0.0, None
        )
    )


def first_index_below(values: np.ndarray, level: float) -> int | None:
    hits = np.flatnonzero(np.asarray(values) <= level)
    return int(hits[0]) if hits.size else None


def gnuplot_script(csv_name: str, title: str, column: int = 1) -> str:
    """Plot true error and both bounds of one column on a log scale."""
    return "\n".join(
        [
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set logscale y",
            "set format y '%.0e'",
            "set xlabel 'iteration'",
            "set ylabel 'A-norm of the error'",
            f"set title '{title}, column {column}'",
            f"col = {column}",
            f"plot '{csv_name}' using ($2 == col ? $1 : 1/0):3 with lines lw 2 "
            "title 'true error', \\",
            f"     '{csv_name}' using ($2 == col ? $1 : 1/0):4 with lines dt 2 "
            "title 'Gauss lower bound', \\",
            f"     '{csv_name}' using ($2 == col ? $1 : 1/0):5 with lines dt 4 "
            "title 'Gauss-Radau upper bound'",
            "",
        ]
    )
