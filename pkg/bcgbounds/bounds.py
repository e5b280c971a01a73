#!/usr/bin/env python

"""
Per-column block Gauss lower bounds and block Gauss-Radau upper bounds on
squared A-norm errors, delay-window accumulation and validity monitoring.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING
import warnings

import numpy as np
import pandas as pd

from .const import BlockVector, Default, SmallBlock
from .errors import (
    BoundsWarning,
    InsufficientHistory,
    NonPositiveMu,
    Singular,
    SingularBracket,
)
from .linalg import SparseSpd, is_spd, solve_small, spmm, sym

if TYPE_CHECKING:
    from .bcg import IterationRecord


def gauss_theta(record: "IterationRecord") -> SmallBlock:
    """Theta_{k-1} = (R_{k-1}^T R_{k-1}) Upsilon_{k-1}, symmetrized."""
    return sym(np.asarray(record.Theta, dtype=float))


@dataclass
class RadauState:
    mu: float
    UpsilonMu_prev: SmallBlock = field(repr=False)
    ThetaMu_prev: SmallBlock | None = field(default=None, repr=False)
    valid: bool = True
    # iteration j at which Theta^(mu)_j - Theta_j first failed Cholesky
    invalid_at: int | None = None


def radau_init(mu: float, m: int, rtr0: SmallBlock | None = None) -> RadauState:
    """Upsilon^(mu)_0 = I / mu and Theta^(mu)_0 = R_0^T R_0 / mu.

    Without `rtr0` the Theta block is filled in by the first `radau_step`.
    """
    if not mu > 0:
        raise NonPositiveMu(f"mu must be positive, got {mu!r}")
    ThetaMu = None if rtr0 is None else sym(np.asarray(rtr0, dtype=float)) / mu
    return RadauState(mu=float(mu), UpsilonMu_prev=np.eye(m) / mu, ThetaMu_prev=ThetaMu)


def _check_gap(state: RadauState, record: "IterationRecord") -> SmallBlock:
    if state.ThetaMu_prev is None:
        state.ThetaMu_prev = sym(record.RtR) / state.mu
    gap = sym(state.ThetaMu_prev - gauss_theta(record))
    if state.valid and not is_spd(gap):
        state.valid = False
        state.invalid_at = record.k - 1
        warnings.warn(
            f"Gauss-Radau bounds lost validity at iteration {record.k - 1}",
            BoundsWarning,
        )
    return gap


def radau_step(state: RadauState, record: "IterationRecord") -> RadauState:
    """Advance Theta^(mu) with the all-symmetric form

        Upsilon^(mu)_k = (mu D + R_k^T R_k)^{-1} D,  D = Theta^(mu)_{k-1} - Theta_{k-1},
        Theta^(mu)_k = (R_k^T R_k) Upsilon^(mu)_k.

    Raises:
        SingularBracket: mu D + R_k^T R_k cannot be solved.
    """
    D = _check_gap(state, record)
    try:
        UpsilonMu = solve_small(state.mu * D + record.RtR_next, D)
    except Singular as e:
        raise SingularBracket(f"Gauss-Radau bracket is singular at k={record.k}") from e
    state.UpsilonMu_prev = UpsilonMu
    state.ThetaMu_prev = sym(record.RtR_next @ UpsilonMu)
    return state


def radau_step_upsilon(state: RadauState, record: "IterationRecord") -> RadauState:
    """Same update through the Upsilon form:

    Upsilon^(mu)_k = [mu (Upsilon^(mu) - Upsilon) + Xi_k]^{-1} (Upsilon^(mu) - Upsilon).
    """
    if record.Upsilon is None or record.Xi is None:
        raise SingularBracket(f"Upsilon or Xi is not available at k={record.k}")
    _check_gap(state, record)
    D = state.UpsilonMu_prev - record.Upsilon
    try:
        UpsilonMu = solve_small(state.mu * D + record.Xi, D)
    except Singular as e:
        raise SingularBracket(f"Gauss-Radau bracket is singular at k={record.k}") from e
    state.UpsilonMu_prev = UpsilonMu
    state.ThetaMu_prev = sym(record.RtR_next @ UpsilonMu)
    return state


def radau_sequence(
    history: list["IterationRecord"], mu: float, upsilon_form: bool = False
) -> list[SmallBlock]:
    """Theta^(mu)_0, ..., Theta^(mu)_K computed after the fact from a history."""
    if not history:
        raise InsufficientHistory("empty history")
    m = history[0].RtR.shape[0]
    state = radau_init(mu, m, history[0].RtR)
    series = [state.ThetaMu_prev]
    advance = radau_step_upsilon if upsilon_form else radau_step
    for record in history:
        advance(state, record)
        series.append(state.ThetaMu_prev)
    return series


def delayed_bounds(
    history: list["IterationRecord"],
    radau_series: list[SmallBlock] | None,
    d: int,
    k: int,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Squared bounds on the column errors of iteration k with delay d.

    `k` is the 0-based index of the iterate X_k whose error E_k is bounded;
    Theta_j is the contribution of step j + 1 (`history[j]`). With l = k + d,

        lower = sum_{j=k}^{l-1} diag(Theta_j),  upper = lower + diag(Theta^(mu)_l).

    Returns:
        tuple[np.ndarray, np.ndarray | None]: per-column squared lower and
            upper bounds; the upper bound is None without a Radau series.

    Raises:
        InsufficientHistory: the history does not reach iteration k + d.
    """
    if d < 1:
        raise ValueError(f"delay must be >= 1, got {d}")
    ell = k + d
    if k < 0 or ell > len(history):
        raise InsufficientHistory(
            f"bounds at k={k} with delay {d} need {ell} iterations, have {len(history)}"
        )
    lower = np.sum([np.diag(gauss_theta(r)) for r in history[k:ell]], axis=0)
    if radau_series is None:
        return lower, None
    if ell >= len(radau_series):
        raise InsufficientHistory(f"Gauss-Radau series does not reach iteration {ell}")
    return lower, lower + np.diag(radau_series[ell])


@dataclass
class MonitorReport:
    # Theta_j, j = 0..K-1
    gauss_spd: list[bool] = field(default_factory=list)
    # Theta^(mu)_j - Theta_j, j = 0..K-1
    gap_spd: list[bool] = field(default_factory=list)
    # B^(mu)_j, j = 1..K
    b_spd: list[bool] = field(default_factory=list)
    b_min_eig: list[float] = field(default_factory=list, repr=False)
    b_max_eig: list[float] = field(default_factory=list, repr=False)
    onset: int | None = None

    def to_frame(self) -> pd.DataFrame:
        K = len(self.gauss_spd)
        df = pd.DataFrame({"iter": range(K), "gauss_spd": self.gauss_spd})
        if self.gap_spd:
            df["gap_spd"] = self.gap_spd
            df["b_spd"] = self.b_spd
            df["b_min_eig"] = self.b_min_eig
            df["b_max_eig"] = self.b_max_eig
        return df


def bound_monitor(
    history: list["IterationRecord"], radau_series: list[SmallBlock] | None = None
) -> MonitorReport:
    """Cholesky tests of Theta_{j-1}, Theta^(mu)_{j-1} - Theta_{j-1} and

        B^(mu)_j = (Theta^(mu)_{j-1} - Theta_{j-1}) - Theta^(mu)_j.

    The first iteration where any test fails is reported as the estimated
    onset of stagnation. Nothing is raised.
    """
    report = MonitorReport()
    for j, record in enumerate(history, start=1):
        theta = gauss_theta(record)
        ok = is_spd(theta)
        report.gauss_spd.append(ok)
        if radau_series is not None and j < len(radau_series):
            gap = sym(radau_series[j - 1] - theta)
            B = sym(gap - radau_series[j])
            gap_ok, b_ok = is_spd(gap), is_spd(B)
            eig = np.linalg.eigvalsh(B) if np.all(np.isfinite(B)) else np.array([np.nan])
            report.gap_spd.append(gap_ok)
            report.b_spd.append(b_ok)
            report.b_min_eig.append(float(eig[0]))
            report.b_max_eig.append(float(eig[-1]))
            ok = ok and gap_ok and b_ok
        if not ok and report.onset is None:
            report.onset = j - 1
    return report


@dataclass
class BoundSeries:
    """Squared per-column bounds for iterations t = 0..K-1 (NaN where unavailable)."""

    lower_sq: np.ndarray = field(repr=False)
    upper_sq: np.ndarray = field(repr=False)
    gauss_valid: np.ndarray = field(repr=False)
    radau_valid: np.ndarray = field(repr=False)
    delay: int = Default.DELAY
    monitor: MonitorReport = field(default_factory=MonitorReport, repr=False)

    @property
    def iterations(self) -> int:
        return self.lower_sq.shape[0]

    @property
    def gauss_lower(self) -> np.ndarray:
        """A-norm scale lower bounds."""
        return np.sqrt(np.clip(self.lower_sq, 0.0, None))

    @property
    def radau_upper(self) -> np.ndarray:
        """A-norm scale upper bounds."""
        return np.sqrt(np.clip(self.upper_sq, 0.0, None))

    def to_frame(self, true_err: np.ndarray | None = None) -> pd.DataFrame:
        """One row per (iteration, column); `true_err` is K x m on the A-norm scale."""
        K, m = self.lower_sq.shape
        true_col = np.nan if true_err is None else np.asarray(true_err)[:K].ravel()
        df = pd.DataFrame(
            {
                "iter": np.repeat(np.arange(K), m),
                "col": np.tile(np.arange(1, m + 1), K),
                "true_err": true_col,
                "gauss_lb": self.gauss_lower.ravel(),
                "radau_ub": self.radau_upper.ravel(),
                "gauss_valid": self.gauss_valid.ravel(),
                "radau_valid": self.radau_valid.ravel(),
            }
        )
        df.loc[np.isnan(self.lower_sq.ravel()), "gauss_lb"] = np.nan
        df.loc[np.isnan(self.upper_sq.ravel()), "radau_ub"] = np.nan
        return df[list(Default.CSV_COLUMNS)]


def bound_series(
    history: list["IterationRecord"],
    radau_series: list[SmallBlock] | None,
    delay: int = Default.DELAY,
) -> BoundSeries:
    """Delayed bounds for every iteration the history can support.

    A bound at iteration t is flagged valid while every monitored block up to
    iteration t + delay passed its Cholesky test.
    """
    K = len(history)
    m = history[0].RtR.shape[0] if history else 0
    lower = np.full((K, m), np.nan)
    upper = np.full((K, m), np.nan)
    gauss_valid = np.zeros((K, m), dtype=bool)
    radau_valid = np.zeros((K, m), dtype=bool)
    monitor = bound_monitor(history, radau_series)
    gauss_ok = np.cumprod(monitor.gauss_spd, dtype=bool) if K else np.array([], bool)
    radau_ok = (
        np.cumprod(np.logical_and(monitor.gap_spd, monitor.b_spd), dtype=bool)
        if monitor.gap_spd
        else np.zeros(0, dtype=bool)
    )
    for t in range(K - delay + 1):
        ell = t + delay
        has_radau = radau_series is not None and ell < len(radau_series)
        lo, up = delayed_bounds(history, radau_series if has_radau else None, delay, t)
        lower[t] = lo
        gauss_valid[t] = gauss_ok[ell - 1]
        if up is not None:
            upper[t] = up
            radau_valid[t] = gauss_ok[ell - 1] and radau_ok[ell - 1]
    return BoundSeries(
        lower_sq=lower,
        upper_sq=upper,
        gauss_valid=gauss_valid,
        radau_valid=radau_valid,
        delay=delay,
        monitor=monitor,
    )


def true_error_matrix(A: SparseSpd, X_true: BlockVector, X_k: BlockVector) -> SmallBlock:
    """(X - X_k)^T A (X - X_k); its diagonal holds squared column A-norm errors."""
    E = np.asarray(X_true, dtype=float) - np.asarray(X_k, dtype=float)
    return sym(E.T @ spmm(A, E))
