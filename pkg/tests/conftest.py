#!/usr/bin/env python

"""
Shared fixtures
"""

import os
from pathlib import Path

import numpy as np
import pytest

from bcgbounds.core import MATRIX_DIR_ENV
from bcgbounds.linalg import SparseSpd
from bcgbounds.matrix_io import (
    ProblemInstance,
    dense_reference_solve,
    poisson2d,
    poisson2d_eigenvalues,
    random_rhs,
)


def random_spd(n: int, seed: int, lo: float = 1.0, hi: float = 10.0) -> SparseSpd:
    """Dense SPD matrix with eigenvalues spread uniformly in [lo, hi]."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * np.linspace(lo, hi, n)) @ Q.T
    return SparseSpd.from_dense(0.5 * (A + A.T))


def make_problem(A: SparseSpd, m: int, seed: int = 1, name: str = "test") -> ProblemInstance:
    B = random_rhs(A.n, m, seed)
    return ProblemInstance(A=A, B=B, X_true=dense_reference_solve(A, B), name=name)


def half_lambda_min(mesh: int) -> float:
    return 0.5 * float(poisson2d_eigenvalues(mesh)[0])


@pytest.fixture
def poisson4() -> SparseSpd:
    return poisson2d(4)


@pytest.fixture
def poisson4_problem(poisson4) -> ProblemInstance:
    return make_problem(poisson4, m=2, seed=1, name="poisson4")


@pytest.fixture
def diag2() -> SparseSpd:
    return SparseSpd.from_dense(np.diag([2.0, 4.0]))


@pytest.fixture
def matrix_dir() -> Path:
    return Path(os.environ.get(MATRIX_DIR_ENV, "matrices"))
