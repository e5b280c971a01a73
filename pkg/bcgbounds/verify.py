#!/usr/bin/env python

"""
Cross-checks tying BCG records to block Lanczos and block quadrature ground
truth on desk-scale problems.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np
import pandas as pd

from .bcg import (
    SolveResult,
    SolverConfig,
    bridge_deltas,
    coefficient_bridge,
    solve,
)
from .bounds import gauss_theta, radau_sequence, true_error_matrix
from .const import Check, Default, SigmaPolicy, SmallBlock, Tol, Variant
from .errors import BcgError, BoundsWarning, SolverError
from .lanczos import (
    BlockTridiagonal,
    LanczosState,
    block_ldlt,
    first_block_column,
    inv11,
    inv11_update,
    lanczos_run,
    radau_matrix,
)
from .linalg import frob, is_spd, jacobi_eigen, relative_deviation, solve_small
from .matrix_io import ProblemInstance, dense_reference_solve


@dataclass
class VerificationReport:
    check: Check
    deviation: float
    tolerance: float
    k_first: int = 0
    k_last: int = 0
    detail: str = ""
    # False in report-only mode (no reorthogonalization)
    enforced: bool = True

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


@dataclass
class ArchivalRun:
    """A BCG run with every iterate kept and its block Lanczos companion on R_0."""

    problem: ProblemInstance
    result: SolveResult = field(repr=False)
    lanczos: LanczosState = field(repr=False)
    mu: float | None = None
    reorthogonalized: bool = True
    # Phi_k = (-1)^k V_{k+1}^T R_k, the chain matching the Lanczos signs
    phis: list[SmallBlock] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.phis = [
            (-1) ** k * V.T @ R
            for k, (V, R) in enumerate(zip(self.lanczos.basis, self.result.R_archive))
        ]

    @property
    def history(self):
        return self.result.history

    @property
    def T(self) -> BlockTridiagonal:
        return self.lanczos.blocks

    @property
    def iterations(self) -> int:
        """Iterations covered by both the BCG run and its Lanczos companion."""
        return min(len(self.history), self.T.k)

    @property
    def Phi_0(self) -> SmallBlock:
        return self.lanczos.Phi_0


def build_archival_run(
    problem: ProblemInstance,
    iterations: int | None = None,
    mu: float | None = None,
    variant: Variant = Default.VARIANT,
    sigma_policy: SigmaPolicy = Default.SIGMA,
    reorthogonalize: bool = True,
) -> ArchivalRun:
    """Run `iterations` BCG steps in archive mode plus one more Lanczos step.

    The extra Lanczos step lets the companion reach termination when the
    Krylov space is exhausted right after the BCG run.
    """
    if iterations is None:
        iterations = max(1, min(Default.VERIFY_STEPS, problem.n // problem.m - 1))
    if problem.X_true is None:
        problem.X_true = dense_reference_solve(problem.A, problem.B)
    config = SolverConfig(
        variant=variant,
        max_iter=iterations,
        stop_tol=Tol.FLOOR,
        mu=mu,
        sigma_policy=sigma_policy,
        use_bounds=False,
        archive=True,
    )
    try:
        result = solve(problem.A, problem.B, config=config)
    except SolverError as e:
        warnings.warn(f"archival run stopped early: {e}", BoundsWarning)
        result = e.result
    lanczos = lanczos_run(
        problem.A,
        result.R_archive[0],
        steps=result.iterations + 1,
        reorthogonalize=reorthogonalize,
        archival=True,
    )
    return ArchivalRun(
        problem=problem,
        result=result,
        lanczos=lanczos,
        mu=mu,
        reorthogonalized=reorthogonalize,
    )


def _report(
    check: Check,
    devs: list[float],
    tolerance: float,
    k_first: int,
    k_last: int,
    run: ArchivalRun | None = None,
    detail: str = "",
) -> VerificationReport:
    return VerificationReport(
        check=check,
        deviation=float(max(devs)) if devs else 0.0,
        tolerance=tolerance,
        k_first=k_first,
        k_last=k_last,
        detail=detail,
        enforced=True if run is None else run.reorthogonalized,
    )


def check_gauss_identity(run: ArchivalRun) -> VerificationReport:
    """Theta_k against Phi_0^T([T_{k+1}^{-1}]_11 - [T_k^{-1}]_11) Phi_0.

    Both the direct difference and the Sherman-Morrison-Woodbury update are
    compared. When the companion terminated at q, Phi_0^T([T_q^{-1}]_11 -
    [T_k^{-1}]_11) Phi_0 is also compared with the true error matrix.
    """
    T, Phi0, K = run.T, run.Phi_0, run.iterations
    devs = []
    prev = np.zeros_like(Phi0)
    for k in range(K):
        inv_next = inv11(T.leading(k + 1))
        scale = frob(Phi0.T @ inv_next @ Phi0)
        theta = gauss_theta(run.history[k])
        quad = Phi0.T @ (inv_next - prev) @ Phi0
        devs.append(relative_deviation(theta, quad, scale))
        if k >= 1:
            Tk = T.leading(k)
            update = inv11_update(Tk, T.diag[k], Tk.coupling)
            devs.append(relative_deviation(theta, Phi0.T @ update @ Phi0, scale))
        prev = inv_next
    detail = ""
    q = run.lanczos.terminated
    if q is not None and run.problem.X_true is not None:
        A, X_true = run.problem.A, run.problem.X_true
        inv_q = inv11(T.leading(q))
        E0 = true_error_matrix(A, X_true, run.result.X_archive[0])
        for k in range(min(q, len(run.result.X_archive))):
            inv_k = inv11(T.leading(k)) if k else np.zeros_like(inv_q)
            Ek = true_error_matrix(A, X_true, run.result.X_archive[k])
            quad = Phi0.T @ (inv_q - inv_k) @ Phi0
            devs.append(relative_deviation(Ek, quad, frob(E0)))
        detail = f"companion terminated at q={q}"
    return _report(Check.gauss_identity, devs, Tol.VERIFY, 0, K - 1, run, detail)


def check_radau_identity(
    run: ArchivalRun, mu: float | None = None
) -> VerificationReport:
    """Theta^(mu)_k against Phi_0^T([T^(mu)_{k+1}^{-1}]_11 - [T_k^{-1}]_11) Phi_0."""
    mu = run.mu if mu is None else mu
    if mu is None:
        raise ValueError("the Gauss-Radau identity needs mu")
    series = run.result.radau_series
    if series is None or run.mu != mu:
        series = radau_sequence(run.history, mu)
    T, Phi0 = run.T, run.Phi_0
    K = min(run.iterations, len(series) - 1)
    devs = []
    try:
        for k in range(K + 1):
            if k == 0:
                quad = Phi0.T @ Phi0 / mu
                scale = frob(quad)
            else:
                Tk = T.leading(k)
                inv_mu = inv11(radau_matrix(Tk, mu))
                quad = Phi0.T @ (inv_mu - inv11(Tk)) @ Phi0
                scale = frob(Phi0.T @ inv_mu @ Phi0)
            devs.append(relative_deviation(series[k], quad, scale))
    except BcgError as e:
        return _report(Check.radau_identity, [np.inf], Tol.VERIFY, 0, K, run, str(e))
    return _report(Check.radau_identity, devs, Tol.VERIFY, 0, K, run)


def check_lanczos_bcg_link(run: ArchivalRun) -> VerificationReport:
    """V_{k+1} = (-1)^k R_k Phi_k^{-1} and X_k = X_0 + V_k T_k^{-1} E_1 Phi_0."""
    m = run.problem.m
    R_archive, X_archive = run.result.R_archive, run.result.X_archive
    K = min(run.iterations, len(run.phis) - 1)
    devs = []
    for k in range(K + 1):
        Phi, R = run.phis[k], R_archive[k]
        devs.append(relative_deviation(Phi.T @ Phi, R.T @ R))
        predicted = solve_small(Phi.T, ((-1) ** k * R).T).T
        devs.append(frob(run.lanczos.basis[k] - predicted) / np.sqrt(m))
    for k in range(1, K + 1):
        Y = first_block_column(run.T.leading(k))
        X = X_archive[0] + sum(V @ Yj for V, Yj in zip(run.lanczos.basis, Y)) @ run.Phi_0
        devs.append(relative_deviation(X, X_archive[k]))
    V = run.lanczos.stacked(min(run.T.k + 1, len(run.lanczos.basis)))
    orth = frob(V.T @ V - np.eye(V.shape[1]))
    return _report(
        Check.lanczos_link,
        devs,
        Tol.VERIFY,
        0,
        K,
        run,
        f"orthogonality residual {orth:.3e}",
    )


def check_coefficient_relations(run: ArchivalRun) -> VerificationReport:
    """Bridged Delta, Gamma and Omega against the Lanczos blocks.

    Also compares the spectrum of each Delta_k with that of Upsilon_{k-1}^{-1}.
    """
    K = min(run.iterations, len(run.phis) - 1)
    history, phis = run.history[:K], run.phis[: K + 1]
    T = run.T.leading(K)
    try:
        bridge = coefficient_bridge(history, phis)
        deltas, _ = bridge_deltas(history, phis)
        ldlt = block_ldlt(T)
    except BcgError as e:
        return _report(Check.coefficients, [np.inf], Tol.VERIFY, 1, K, run, str(e))
    scale = frob(T.to_dense())
    devs = []
    for ours, theirs in zip(bridge.diag, T.diag):
        devs.append(relative_deviation(ours, theirs, scale))
    for ours, theirs in zip(bridge.sub + [bridge.coupling], T.sub + [T.coupling]):
        devs.append(relative_deviation(ours, theirs, scale))
    for ours, theirs in zip(deltas, ldlt.Delta):
        devs.append(relative_deviation(ours, theirs, scale))
    for Delta, record in zip(deltas, history):
        eig_delta = np.sort(np.real(np.linalg.eigvals(Delta)))
        eig_ups = np.sort(1.0 / np.real(np.linalg.eigvals(record.Upsilon)))
        devs.append(relative_deviation(eig_delta, eig_ups, np.max(np.abs(eig_delta))))
    return _report(Check.coefficients, devs, Tol.VERIFY, 1, K, run)


def check_radau_eigenstructure(T: BlockTridiagonal, mu: float) -> VerificationReport:
    """T^(mu)_{k+1} has mu as an eigenvalue of multiplicity m; the rest lie above mu."""
    try:
        dense = radau_matrix(T, mu).to_dense()
        w, _ = jacobi_eigen(dense)
    except BcgError as e:
        return _report(Check.radau_eigen, [np.inf], Tol.VERIFY, T.k, T.k, detail=str(e))
    scale = max(frob(dense), Tol.FLOOR)
    near = np.abs(w - mu) <= Tol.VERIFY * scale
    count = int(near.sum())
    if count != T.m or np.any(w[~near] <= mu):
        dev = np.inf
    else:
        dev = float(np.max(np.abs(w[near] - mu)) / scale)
    return _report(
        Check.radau_eigen, [dev], Tol.VERIFY, T.k, T.k, detail=f"{count} eigenvalues at mu"
    )


def check_radau_eigenstructure_series(
    run: ArchivalRun, mu: float | None = None
) -> VerificationReport:
    mu = run.mu if mu is None else mu
    if mu is None:
        raise ValueError("the eigenstructure check needs mu")
    reports = [
        check_radau_eigenstructure(run.T.leading(k), mu)
        for k in range(1, run.iterations + 1)
    ]
    worst = max(reports, key=lambda r: r.deviation)
    return _report(
        Check.radau_eigen,
        [r.deviation for r in reports],
        Tol.VERIFY,
        1,
        run.iterations,
        run,
        worst.detail,
    )


def check_inverse_lemma(G: SmallBlock, H: SmallBlock) -> VerificationReport:
    """(G^{-1} - H^{-1})^{-1} = G (H - G)^{-1} G + G, and G^{-1} - H^{-1} is SPD
    when G and H - G are."""
    G = np.asarray(G, dtype=float)
    H = np.asarray(H, dtype=float)
    eye = np.eye(G.shape[0])
    try:
        diff = solve_small(G, eye) - solve_small(H, eye)
        lhs = solve_small(diff, eye)
        rhs = G @ solve_small(H - G, G) + G
    except BcgError as e:
        return _report(Check.inverse_lemma, [np.inf], Tol.LEMMA, 0, 0, detail=str(e))
    dev = relative_deviation(lhs, rhs)
    if is_spd(G) and is_spd(H - G) and not is_spd(diff):
        dev = np.inf
    return _report(Check.inverse_lemma, [dev], Tol.LEMMA, 0, 0)


def random_spd_pair(
    rng: np.random.Generator, m: int = Default.LEMMA_BLOCK
) -> tuple[SmallBlock, SmallBlock]:
    """G SPD and H = G + (SPD increment)."""
    M = rng.standard_normal((m, m))
    N = rng.standard_normal((m, m))
    G = M @ M.T + m * np.eye(m)
    return G, G + N @ N.T + np.eye(m)


def check_inverse_lemma_random(
    seeds: int = Default.LEMMA_SEEDS, m: int = Default.LEMMA_BLOCK
) -> VerificationReport:
    reports = [
        check_inverse_lemma(*random_spd_pair(np.random.default_rng(seed), m))
        for seed in range(seeds)
    ]
    return _report(
        Check.inverse_lemma,
        [r.deviation for r in reports],
        Tol.LEMMA,
        0,
        seeds - 1,
        detail=f"{seeds} random SPD pairs, m={m}",
    )


def check_telescoping(run: ArchivalRun) -> VerificationReport:
    """diag(E_{k-1}) - diag(E_k) = diag(Theta_{k-1}) relative to diag(E_0)."""
    A, X_true = run.problem.A, run.problem.X_true
    if X_true is None:
        raise ValueError("telescoping needs the true solution")
    diags = np.array(
        [np.diag(true_error_matrix(A, X_true, X)) for X in run.result.X_archive]
    )
    ref = np.maximum(diags[0], Tol.FLOOR)
    devs = [
        float(np.max(np.abs(diags[k - 1] - diags[k] - np.diag(gauss_theta(r))) / ref))
        for k, r in enumerate(run.history, start=1)
    ]
    return _report(Check.telescoping, devs, Tol.VERIFY, 1, len(run.history), run)


def run_suite(
    run: ArchivalRun,
    checks: list[Check] | None = None,
    seeds: int = Default.LEMMA_SEEDS,
) -> list[VerificationReport]:
    """Run the selected checks; Gauss-Radau checks are skipped without mu."""
    checks = list(Check) if checks is None else checks
    reports = []
    for check in checks:
        match check:
            case Check.gauss_identity:
                reports.append(check_gauss_identity(run))
            case Check.radau_identity if run.mu is not None:
                reports.append(check_radau_identity(run))
            case Check.lanczos_link:
                reports.append(check_lanczos_bcg_link(run))
            case Check.coefficients:
                reports.append(check_coefficient_relations(run))
            case Check.radau_eigen if run.mu is not None:
                reports.append(check_radau_eigenstructure_series(run))
            case Check.inverse_lemma:
                report = check_inverse_lemma_random(seeds)
                report.enforced = run.reorthogonalized
                reports.append(report)
            case Check.telescoping:
                reports.append(check_telescoping(run))
            case _:
                warnings.warn(f"{check.name} skipped: no mu given", BoundsWarning)
    return reports


def render(reports: list[VerificationReport]) -> pd.DataFrame:
    """Report table with columns check, deviation, tolerance, pass, ..."""
    return pd.DataFrame(
        {
            "check": [r.check.name for r in reports],
            "deviation": [r.deviation for r in reports],
            "tolerance": [r.tolerance for r in reports],
            "pass": [r.passed for r in reports],
            "k_first": [r.k_first for r in reports],
            "k_last": [r.k_last for r in reports],
            "enforced": [r.enforced for r in reports],
            "detail": [r.detail for r in reports],
        }
    )
