#!/usr/bin/env python

"""Problem loading and the smallest-eigenvalue hint of a run."""

import pytest

from bcgbounds.bcg import SolverConfig
from bcgbounds.core import Run, load_problem
from bcgbounds.errors import BoundsWarning
from bcgbounds.matrix_io import poisson2d, poisson2d_eigenvalues, write_matrix_market


def test_poisson_hint():
    problem = load_problem(poisson=4, m=2)
    assert problem.lambda_min_hint == pytest.approx(poisson2d_eigenvalues(4)[0])
    assert problem.name == "poisson4"


def test_explicit_hint_wins():
    assert load_problem(poisson=3, m=1, lambda_min_hint=0.5).lambda_min_hint == 0.5


def test_matrix_file_has_no_hint(tmp_path):
    path = tmp_path.joinpath("p3.mtx")
    path.write_text(write_matrix_market(poisson2d(3)))
    assert load_problem(matrix=path, m=1).lambda_min_hint is None


def test_mu_above_hint_warns():
    problem = load_problem(poisson=4, m=2)
    with pytest.warns(BoundsWarning, match="not below lambda_min"):
        Run(problem=problem, config=SolverConfig(mu=1.0))
