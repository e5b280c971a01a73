#!/usr/bin/env python

"""Gauss and Gauss-Radau estimates, delayed bounds and the validity monitor."""

import numpy as np
import pytest

from bcgbounds.bcg import SolverConfig, solve
from bcgbounds.bounds import (
    bound_monitor,
    bound_series,
    delayed_bounds,
    gauss_theta,
    radau_init,
    radau_sequence,
    radau_step,
    radau_step_upsilon,
    true_error_matrix,
)
from bcgbounds.const import Default, Tol
from bcgbounds.errors import BoundsWarning, InsufficientHistory, NonPositiveMu
from bcgbounds.linalg import SparseSpd
from bcgbounds.matrix_io import dense_reference_solve, random_rhs

from conftest import random_spd


MU = 0.5


@pytest.fixture(scope="module")
def spd_run():
    """Random SPD system with spectrum in [1, 10], 12 archived BCG steps."""
    A = random_spd(60, 21)
    B = random_rhs(60, 3, 21)
    config = SolverConfig(
        max_iter=12, stop_tol=Tol.FLOOR, use_bounds=False, mu=MU, archive=True
    )
    result = solve(A, B, config=config)
    X = dense_reference_solve(A, B)
    errors = np.array([np.diag(true_error_matrix(A, X, Xk)) for Xk in result.X_archive])
    return result, errors


class TestRadauInit:
    def test_unit_mu(self):
        state = radau_init(1.0, 2)
        np.testing.assert_array_equal(state.UpsilonMu_prev, np.eye(2))
        assert state.ThetaMu_prev is None

    def test_scalar_base(self):
        state = radau_init(0.25, 1, np.array([[1.0]]))
        assert state.ThetaMu_prev[0, 0] == pytest.approx(4.0)

    def test_nonpositive(self):
        with pytest.raises(NonPositiveMu):
            radau_init(0.0, 2)


class TestSingleStep:
    """One step on diag(2, 4) with b = (1, 1) and mu = 1, by hand."""

    @pytest.fixture
    def record(self, diag2):
        config = SolverConfig(max_iter=1, stop_tol=Tol.FLOOR, use_bounds=False)
        return solve(diag2, np.ones(2), config=config).history[0]

    def test_gauss_theta(self, record):
        np.testing.assert_allclose(gauss_theta(record), [[2.0 / 3.0]])

    @pytest.mark.parametrize("advance", [radau_step, radau_step_upsilon])
    def test_radau_step(self, record, advance):
        state = advance(radau_init(1.0, 1, record.RtR), record)
        np.testing.assert_allclose(state.UpsilonMu_prev, [[6.0 / 7.0]])
        np.testing.assert_allclose(state.ThetaMu_prev, [[4.0 / 21.0]])
        assert state.valid
        # Theta_0 + Theta^(mu)_1 bounds b^T A^{-1} b = 3/4 from above
        assert 0.75 < 2.0 / 3.0 + state.ThetaMu_prev[0, 0]


class TestRadauSeries:
    def test_forms_agree(self, spd_run):
        result, _ = spd_run
        theta_form = radau_sequence(result.history, MU)
        upsilon_form = radau_sequence(result.history, MU, upsilon_form=True)
        for a, b in zip(theta_form, upsilon_form):
            atol = 1e-12 * np.abs(theta_form[0]).max()
            np.testing.assert_allclose(a, b, rtol=1e-8, atol=atol)

    def test_matches_solver(self, spd_run):
        result, _ = spd_run
        for a, b in zip(radau_sequence(result.history, MU), result.radau_series):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)

    def test_empty_history(self):
        with pytest.raises(InsufficientHistory):
            radau_sequence([], MU)

    def test_exact_two_node_rule(self):
        # the Radau rule with the node at an eigenvalue of A is exact after one step
        A = SparseSpd.from_dense(np.diag([1.0, 3.0]))
        b = np.array([1.0, 1.0])
        config = SolverConfig(max_iter=1, stop_tol=Tol.FLOOR, use_bounds=False, mu=1.0)
        result = solve(A, b, config=config)
        exact = 1.0 + 1.0 / 3.0
        assert result.radau_series[0][0, 0] == pytest.approx(2.0)
        upper = result.history[0].Theta[0, 0] + result.radau_series[1][0, 0]
        assert upper == pytest.approx(exact, rel=1e-12)


class TestDelayedBounds:
    def test_sandwich(self, spd_run):
        result, errors = spd_run
        slack = 1e-10 * errors[0]
        for d in (1, 2, 4):
            for t in range(result.iterations - d):
                lower, upper = delayed_bounds(result.history, result.radau_series, d, t)
                assert np.all(lower <= errors[t] + slack)
                assert np.all(errors[t] <= upper + slack)

    def test_monotone_in_delay(self, spd_run):
        result, errors = spd_run
        slack = 1e-10 * errors[0]
        for t in range(4):
            prev_lo, prev_up = delayed_bounds(result.history, result.radau_series, 1, t)
            for d in range(2, 6):
                lo, up = delayed_bounds(result.history, result.radau_series, d, t)
                assert np.all(lo >= prev_lo - slack)
                assert np.all(up <= prev_up + slack)
                prev_lo, prev_up = lo, up

    def test_telescoping(self, spd_run):
        result, errors = spd_run
        for k, record in enumerate(result.history, start=1):
            np.testing.assert_allclose(
                errors[k - 1] - errors[k], np.diag(record.Theta), atol=1e-8 * errors[0].max()
            )

    def test_index_is_bounded_iterate(self, spd_run):
        # k names X_k; the lower bound gathers history[k:k + d]
        result, errors = spd_run
        for k in range(3):
            lower, _ = delayed_bounds(result.history, result.radau_series, 2, k)
            np.testing.assert_allclose(
                lower, errors[k] - errors[k + 2], atol=1e-8 * errors[0].max()
            )

    def test_without_radau(self, spd_run):
        result, _ = spd_run
        lower, upper = delayed_bounds(result.history, None, 2, 0)
        assert upper is None
        np.testing.assert_allclose(
            lower, np.diag(result.history[0].Theta) + np.diag(result.history[1].Theta)
        )

    def test_insufficient_history(self, spd_run):
        result, _ = spd_run
        K = result.iterations
        with pytest.raises(InsufficientHistory):
            delayed_bounds(result.history, result.radau_series, 2, K - 1)
        with pytest.raises(ValueError):
            delayed_bounds(result.history, result.radau_series, 0, 0)

    def test_exact_at_convergence(self):
        A = SparseSpd.from_dense(np.diag([1.0, 2.0, 3.0, 4.0]))
        B = random_rhs(4, 2, 1)
        config = SolverConfig(max_iter=2, stop_tol=Tol.FLOOR, use_bounds=False)
        result = solve(A, B, config=config)
        X = dense_reference_solve(A, B)
        lower, _ = delayed_bounds(result.history, None, 2, 0)
        np.testing.assert_allclose(lower, np.diag(true_error_matrix(A, X, np.zeros_like(B))))


class TestMonitor:
    def test_benign_run(self, spd_run):
        result, _ = spd_run
        report = bound_monitor(result.history, result.radau_series)
        assert all(report.gauss_spd) and all(report.gap_spd) and all(report.b_spd)
        assert report.onset is None
        assert min(report.b_min_eig) > 0
        frame = report.to_frame()
        assert list(frame.columns) == [
            "iter", "gauss_spd", "gap_spd", "b_spd", "b_min_eig", "b_max_eig"
        ]

    def test_gauss_only(self, spd_run):
        result, _ = spd_run
        report = bound_monitor(result.history)
        assert report.gap_spd == []
        assert list(report.to_frame().columns) == ["iter", "gauss_spd"]

    def test_mu_above_spectrum_flags(self):
        A = SparseSpd.from_dense(np.diag([1.0, 2.0, 3.0, 4.0, 5.0]))
        # Rayleigh quotient of b is below mu, so Theta_0 exceeds Theta^(mu)_0
        b = np.array([1.0, 1.0, 0.1, 0.1, 0.1])
        config = SolverConfig(max_iter=2, stop_tol=Tol.FLOOR, use_bounds=False, mu=2.5)
        with pytest.warns(BoundsWarning, match="lost validity"):
            result = solve(A, b, config=config)
        report = bound_monitor(result.history, result.radau_series)
        assert report.onset == 0
        assert not report.gap_spd[0]
        assert not np.any(result.bounds.radau_valid)


class TestBoundSeries:
    def test_shape_and_tail(self, spd_run):
        result, _ = spd_run
        series = bound_series(result.history, result.radau_series, delay=3)
        K = result.iterations
        assert series.lower_sq.shape == (K, 3)
        assert np.all(np.isnan(series.lower_sq[K - 2 :]))
        assert not np.any(np.isnan(series.lower_sq[: K - 2]))
        assert np.all(series.gauss_valid[: K - 2]) and np.all(series.radau_valid[: K - 2])
        assert not np.any(series.radau_valid[K - 2 :])

    def test_frame(self, spd_run):
        result, errors = spd_run
        series = result.bounds
        frame = series.to_frame(np.sqrt(errors))
        K = result.iterations
        assert list(frame.columns) == list(Default.CSV_COLUMNS)
        assert len(frame) == K * 3
        assert frame["col"].tolist()[:4] == [1, 2, 3, 1]
        assert not frame.isna().any().any()
        row = frame.iloc[4]
        assert row["iter"] == 1 and row["col"] == 2
        assert row["gauss_lb"] == pytest.approx(series.gauss_lower[1, 1])
        assert row["gauss_lb"] <= row["true_err"] * (1 + 1e-10) <= row["radau_ub"] * (1 + 1e-10)

    def test_empty_history(self):
        series = bound_series([], None)
        assert series.iterations == 0
        assert len(series.to_frame()) == 0


def test_true_error_matrix(diag2):
    b = np.array([[1.0], [1.0]])
    X = dense_reference_solve(diag2, b)
    np.testing.assert_allclose(true_error_matrix(diag2, X, np.zeros_like(b)), [[0.75]])
    np.testing.assert_array_equal(true_error_matrix(diag2, X, X), [[0.0]])
