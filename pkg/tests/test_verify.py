#!/usr/bin/env python

"""Verification suite on desk-scale problems."""

import numpy as np
import pytest

from bcgbounds.const import Check, Tol
from bcgbounds.errors import BoundsWarning
from bcgbounds.lanczos import BlockTridiagonal
from bcgbounds.matrix_io import poisson2d
from bcgbounds.verify import (
    build_archival_run,
    check_coefficient_relations,
    check_gauss_identity,
    check_inverse_lemma,
    check_inverse_lemma_random,
    check_lanczos_bcg_link,
    check_radau_eigenstructure,
    check_radau_identity,
    check_telescoping,
    render,
    run_suite,
)

from conftest import half_lambda_min, make_problem, random_spd


@pytest.fixture(scope="module")
def spd_archival():
    problem = make_problem(random_spd(24, 8), m=2, seed=8)
    return build_archival_run(problem, iterations=5, mu=0.5)


@pytest.fixture(scope="module")
def poisson_archival():
    problem = make_problem(poisson2d(4), m=2, seed=1)
    with pytest.warns(BoundsWarning):
        return build_archival_run(problem, mu=half_lambda_min(4))


class TestArchivalRun:
    def test_layout(self, spd_archival):
        run = spd_archival
        assert run.iterations == 5
        assert run.T.k == 6
        assert len(run.lanczos.basis) == 7
        assert len(run.phis) == 6
        np.testing.assert_allclose(run.phis[0], run.Phi_0, atol=1e-13)

    def test_default_iterations(self, poisson_archival):
        assert poisson_archival.result.iterations == 7
        assert poisson_archival.lanczos.terminated == 7


class TestChecks:
    @pytest.mark.parametrize(
        "check",
        [
            check_gauss_identity,
            check_radau_identity,
            check_lanczos_bcg_link,
            check_coefficient_relations,
            check_telescoping,
        ],
    )
    def test_passes(self, spd_archival, check):
        report = check(spd_archival)
        assert report.passed, report
        assert report.enforced

    def test_gauss_identity_at_termination(self, poisson_archival):
        report = check_gauss_identity(poisson_archival)
        assert report.passed, report
        assert "q=7" in report.detail

    def test_signs_alternate(self):
        run = build_archival_run(make_problem(poisson2d(4), m=1), iterations=4)
        for k, Phi in enumerate(run.phis):
            assert Phi[0, 0] > 0, k
        assert check_lanczos_bcg_link(run).passed

    def test_orthogonality_reported(self, spd_archival):
        detail = check_lanczos_bcg_link(spd_archival).detail
        assert float(detail.split()[-1]) <= Tol.ORTH

    def test_radau_identity_needs_mu(self):
        run = build_archival_run(make_problem(random_spd(10, 1), m=1), iterations=2)
        with pytest.raises(ValueError):
            check_radau_identity(run)

    def test_radau_identity_other_mu(self, spd_archival):
        assert check_radau_identity(spd_archival, mu=0.9).passed


class TestRadauEigenstructure:
    def test_scalar(self):
        T = BlockTridiagonal(m=1)
        T.append([[2.0]], [[1.0]])
        report = check_radau_eigenstructure(T, 1.0)
        assert report.passed
        assert report.detail == "1 eigenvalues at mu"

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_poisson(self, poisson_archival, k):
        report = check_radau_eigenstructure(poisson_archival.T.leading(k), half_lambda_min(4))
        assert report.passed, report

    def test_just_below_ritz_values(self, spd_archival):
        T = spd_archival.T.leading(3)
        ritz = np.min(np.linalg.eigvalsh(T.to_dense()))
        assert check_radau_eigenstructure(T, 0.999 * ritz).passed

    def test_mu_above_ritz_values(self, spd_archival):
        T = spd_archival.T.leading(3)
        report = check_radau_eigenstructure(T, 100.0)
        assert report.deviation == np.inf
        assert not report.passed


class TestInverseLemma:
    def test_identity(self):
        report = check_inverse_lemma(np.eye(2), 2 * np.eye(2))
        assert report.passed
        assert report.deviation < 1e-15

    def test_scalar(self):
        assert check_inverse_lemma([[2.0]], [[3.0]]).passed

    def test_random_pairs(self):
        report = check_inverse_lemma_random(seeds=100)
        assert report.passed
        assert report.k_last == 99

    def test_singular_difference(self):
        report = check_inverse_lemma(np.eye(2), np.eye(2))
        assert not report.passed


class TestSuite:
    def test_all_checks(self, spd_archival):
        reports = run_suite(spd_archival, seeds=10)
        assert [r.check for r in reports] == list(Check)
        assert all(r.passed for r in reports)

    def test_without_mu(self):
        run = build_archival_run(make_problem(random_spd(12, 2), m=2), iterations=3)
        with pytest.warns(BoundsWarning, match="skipped"):
            reports = run_suite(run, seeds=5)
        assert Check.radau_identity not in {r.check for r in reports}
        assert Check.radau_eigen not in {r.check for r in reports}
        assert len(reports) == len(Check) - 2

    def test_report_only(self):
        problem = make_problem(random_spd(12, 2), m=2)
        run = build_archival_run(problem, iterations=3, mu=0.5, reorthogonalize=False)
        reports = run_suite(run, checks=[Check.gauss_identity, Check.inverse_lemma], seeds=5)
        # the random inverse-lemma pairs follow the run into report-only mode
        assert not any(r.enforced for r in reports)

    def test_render(self, spd_archival):
        table = render(run_suite(spd_archival, checks=[Check.telescoping]))
        assert list(table.columns) == [
            "check", "deviation", "tolerance", "pass", "k_first", "k_last", "enforced", "detail"
        ]
        assert table.loc[0, "check"] == "telescoping"
        assert bool(table.loc[0, "pass"])
