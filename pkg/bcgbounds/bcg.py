#!/usr/bin/env python

"""
Block conjugate gradients: standard BCG, O'Leary's scaled BCG and
Dubrulle-R BCG behind one iteration interface emitting coefficient records.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from . import bounds
from .const import BlockVector, Default, SigmaPolicy, SmallBlock, Tol, Variant
from .errors import (
    BcgError,
    BoundsWarning,
    NearSingularCoefficient,
    NotPositiveDefinite,
    NonPositiveMu,
    RankDeficient,
    Singular,
    SingularPhi,
    SingularSigma,
    SolverError,
)
from .lanczos import BlockTridiagonal
from .linalg import (
    SparseSpd,
    cholesky,
    condition_estimate,
    frob,
    qr_thin,
    solve_small,
    spmm,
    sym,
)


@dataclass
class SolverConfig:
    variant: Variant = field(default=Default.VARIANT)
    max_iter: int = field(default=Default.MAX_ITER)
    stop_tol: float = field(default=Default.TOL)
    mu: float | None = field(default=None)
    delay: int = field(default=Default.DELAY)
    sigma_policy: SigmaPolicy = field(default=Default.SIGMA)
    recompute_interval: int = field(default=Default.RECOMPUTE_INTERVAL)
    # stop on the delayed Gauss estimate; False falls back to the residual
    use_bounds: bool = field(default=True)
    # keep X_k and R_k of every iteration (desk scale only)
    archive: bool = field(default=False)
    stop_on_stagnation: bool = field(default=False)

    def __post_init__(self) -> None:
        if isinstance(self.variant, str):
            self.variant = Variant[self.variant]
        if isinstance(self.sigma_policy, str):
            self.sigma_policy = SigmaPolicy[self.sigma_policy]
        if self.delay < 1:
            raise ValueError(f"delay must be >= 1, got {self.delay}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.stop_tol > 0:
            raise ValueError(f"stop_tol must be positive, got {self.stop_tol}")
        if self.recompute_interval < 1:
            raise ValueError("recompute_interval must be >= 1")
        if self.mu is not None and not self.mu > 0:
            raise NonPositiveMu(f"mu must be positive, got {self.mu!r}")


@dataclass
class IterationRecord:
    """Coefficients of step k (variant independent, effective quantities).

    RtR is R_{k-1}^T R_{k-1}, RtR_next is R_k^T R_k, Theta is Theta_{k-1}.
    """

    k: int
    RtR: SmallBlock = field(repr=False)
    RtR_next: SmallBlock = field(repr=False)
    Upsilon: SmallBlock | None = field(repr=False)
    Xi: SmallBlock | None = field(repr=False)
    Theta: SmallBlock = field(repr=False)
    residual_fro: float = 0.0
    # ||(B - A X_k) - R_k||_F / ||B - A X_k||_F when recomputed
    true_residual_gap: float | None = None


@dataclass
class SolverState:
    X: BlockVector = field(repr=False)
    R: BlockVector = field(repr=False)
    # P_k (standard, O'Leary) or S_k (Dubrulle-R)
    P: BlockVector = field(repr=False)
    RtR: SmallBlock = field(repr=False)
    Q: BlockVector | None = field(default=None, repr=False)
    Phi_hat: SmallBlock | None = field(default=None, repr=False)
    # Sigma_k^{-1}; None stands for the identity
    Sigma_inv: SmallBlock | None = field(default=None, repr=False)
    k: int = 0
    history: list[IterationRecord] = field(default_factory=list, repr=False)


@dataclass
class SolveResult:
    X: BlockVector = field(repr=False)
    history: list[IterationRecord] = field(repr=False)
    bounds: "bounds.BoundSeries" = field(repr=False)
    radau_series: list[SmallBlock] | None = field(default=None, repr=False)
    converged: bool = False
    stagnation_index: int | None = None
    X_archive: list[BlockVector] | None = field(default=None, repr=False)
    R_archive: list[BlockVector] | None = field(default=None, repr=False)
    config: SolverConfig = field(default_factory=SolverConfig, repr=False)
    error: str | None = None

    @property
    def iterations(self) -> int:
        return len(self.history)


def _guard(M: SmallBlock, which: str) -> None:
    cond = condition_estimate(M)
    if cond > Tol.COND:
        raise NearSingularCoefficient(which, cond)


def _solve(S: SmallBlock, RHS: np.ndarray, which: str) -> np.ndarray:
    try:
        return solve_small(S, RHS)
    except Singular as e:
        raise NearSingularCoefficient(which, np.inf) from e


def _sigma_inverse(P: BlockVector) -> tuple[BlockVector, SmallBlock]:
    """P Sigma with Sigma the inverse R factor: returns (Q, Sigma^{-1})."""
    try:
        return qr_thin(P)
    except RankDeficient as e:
        raise SingularSigma(
            f"direction block is rank deficient at column {e.column}"
        ) from e


def init_state(
    A: SparseSpd,
    B: BlockVector,
    X0: BlockVector | None = None,
    variant: Variant = Default.VARIANT,
    sigma_policy: SigmaPolicy = Default.SIGMA,
) -> SolverState:
    """R_0 = B - A X_0 and the first direction block of the chosen variant.

    Raises:
        RankDeficient: R_0 does not have full column rank.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    X0 = np.zeros_like(B) if X0 is None else np.array(X0, dtype=float).reshape(B.shape)
    R0 = B - spmm(A, X0)
    Q0, Phi0 = qr_thin(R0)
    RtR = sym(R0.T @ R0)
    match variant:
        case Variant.bcg:
            return SolverState(X=X0, R=R0, P=R0.copy(), RtR=RtR)
        case Variant.olbcg:
            if sigma_policy == SigmaPolicy.qr:
                return SolverState(X=X0, R=R0, P=Q0, RtR=RtR, Sigma_inv=Phi0)
            return SolverState(X=X0, R=R0, P=R0.copy(), RtR=RtR)
        case Variant.drbcg:
            return SolverState(X=X0, R=R0, P=Q0.copy(), RtR=RtR, Q=Q0, Phi_hat=Phi0)
        case _:
            raise ValueError(f"unknown variant {variant!r}")


def bcg_step(state: SolverState, A: SparseSpd) -> IterationRecord:
    """Standard BCG step; updates `state` in place and returns the record."""
    P, RtR = state.P, state.RtR
    AP = spmm(A, P)
    PAP = sym(P.T @ AP)
    _guard(PAP, "P^T A P")
    _guard(RtR, "R^T R")
    Upsilon = _solve(PAP, RtR, "P^T A P")
    state.X = state.X + P @ Upsilon
    state.R = state.R - AP @ Upsilon
    RtR_next = sym(state.R.T @ state.R)
    Xi = _solve(RtR, RtR_next, "R^T R")
    state.P = state.R + P @ Xi
    state.RtR = RtR_next
    state.k += 1
    record = IterationRecord(
        k=state.k,
        RtR=RtR,
        RtR_next=RtR_next,
        Upsilon=Upsilon,
        Xi=Xi,
        Theta=RtR @ Upsilon,
        residual_fro=frob(state.R),
    )
    state.history.append(record)
    return record


def olbcg_step(
    state: SolverState, A: SparseSpd, sigma_policy: SigmaPolicy = Default.SIGMA
) -> IterationRecord:
    """O'Leary's BCG step with scaling matrices Sigma_k.

    The record stores the effective Sigma_{k-1} Upsilon~_{k-1} and the
    corrected estimate (R^T R) Sigma_{k-1} Upsilon~_{k-1}.
    """
    P, RtR, Sigma_inv = state.P, state.RtR, state.Sigma_inv
    AP = spmm(A, P)
    PAP = sym(P.T @ AP)
    _guard(PAP, "P^T A P")
    _guard(RtR, "R^T R")
    rhs = RtR if Sigma_inv is None else _solve(Sigma_inv.T, RtR, "Sigma")
    Upsilon_t = _solve(PAP, rhs, "P^T A P")
    state.X = state.X + P @ Upsilon_t
    state.R = state.R - AP @ Upsilon_t
    RtR_next = sym(state.R.T @ state.R)
    Xi = _solve(RtR, RtR_next, "R^T R")
    Xi_t = Xi if Sigma_inv is None else Sigma_inv @ Xi
    P_next = state.R + P @ Xi_t
    if sigma_policy == SigmaPolicy.qr:
        state.P, state.Sigma_inv = _sigma_inverse(P_next)
    else:
        state.P, state.Sigma_inv = P_next, None
    Upsilon = Upsilon_t if Sigma_inv is None else _solve(Sigma_inv, Upsilon_t, "Sigma")
    state.RtR = RtR_next
    state.k += 1
    record = IterationRecord(
        k=state.k,
        RtR=RtR,
        RtR_next=RtR_next,
        Upsilon=Upsilon,
        Xi=Xi,
        Theta=RtR @ Upsilon,
        residual_fro=frob(state.R),
    )
    state.history.append(record)
    return record


def drbcg_step(state: SolverState, A: SparseSpd) -> IterationRecord:
    """Dubrulle-R BCG step; R_k^T R_k is replaced by Phi_hat_k^T Phi_hat_k."""
    S, Q, Phi = state.P, state.Q, state.Phi_hat
    AS = spmm(A, S)
    SAS = sym(S.T @ AS)
    _guard(SAS, "S^T A S")
    # Pi_hat = (S^T A S)^{-1} is only ever applied
    PiPhi = _solve(SAS, Phi, "S^T A S")
    state.X = state.X + S @ PiPhi
    AS_Pi = _solve(SAS, AS.T, "S^T A S").T
    Q_next, Psi = qr_thin(Q - AS_Pi, check_rank=False)
    state.P = Q_next + S @ Psi.T
    Phi_next = Psi @ Phi
    state.Q, state.Phi_hat = Q_next, Phi_next
    state.R = Q_next @ Phi_next
    RtR = sym(Phi.T @ Phi)
    RtR_next = sym(Phi_next.T @ Phi_next)
    try:
        Upsilon = solve_small(Phi, PiPhi)
        Xi = solve_small(RtR, RtR_next)
    except Singular:
        Upsilon = Xi = None
    state.RtR = RtR_next
    state.k += 1
    record = IterationRecord(
        k=state.k,
        RtR=RtR,
        RtR_next=RtR_next,
        Upsilon=Upsilon,
        Xi=Xi,
        Theta=Phi.T @ PiPhi,
        residual_fro=frob(Phi_next),
    )
    state.history.append(record)
    return record


def step(state: SolverState, A: SparseSpd, config: SolverConfig) -> IterationRecord:
    match config.variant:
        case Variant.bcg:
            return bcg_step(state, A)
        case Variant.olbcg:
            return olbcg_step(state, A, config.sigma_policy)
        case Variant.drbcg:
            return drbcg_step(state, A)
        case _:
            raise ValueError(f"unknown variant {config.variant!r}")


def _converged(history: list[IterationRecord], config: SolverConfig, bnorm: float) -> bool:
    if not config.use_bounds:
        return history[-1].residual_fro <= config.stop_tol * max(bnorm, Tol.FLOOR)
    K, d = len(history), config.delay
    if K < d:
        return False
    diags = np.array([np.diag(r.Theta) for r in history])
    lower = np.clip(diags[K - d :].sum(axis=0), 0.0, None)
    ref = np.maximum(diags.sum(axis=0), Tol.FLOOR)
    return float(np.sqrt(lower / ref).max()) <= config.stop_tol


def solve(
    A: SparseSpd,
    B: BlockVector,
    X0: BlockVector | None = None,
    config: SolverConfig | None = None,
) -> SolveResult:
    """Iterate the configured BCG variant and attach Gauss / Gauss-Radau bounds.

    Raises:
        RankDeficient: R_0 is rank deficient.
        SolverError: any failure during the iteration; `.result` holds the
            partial history and bounds.
    """
    config = config or SolverConfig()
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    state = init_state(A, B, X0, config.variant, config.sigma_policy)
    radau = None
    radau_series = None
    if config.mu is not None:
        radau = bounds.radau_init(config.mu, B.shape[1], state.RtR)
        radau_series = [radau.ThetaMu_prev]
    X_archive = [state.X.copy()] if config.archive else None
    R_archive = [state.R.copy()] if config.archive else None
    bnorm = frob(B)
    converged = False
    stagnation_index = None

    def finish(error: str | None = None) -> SolveResult:
        return SolveResult(
            X=state.X,
            history=state.history,
            bounds=bounds.bound_series(state.history, radau_series, config.delay),
            radau_series=radau_series,
            converged=converged,
            stagnation_index=stagnation_index,
            X_archive=X_archive,
            R_archive=R_archive,
            config=config,
            error=error,
        )

    for _ in range(config.max_iter):
        try:
            record = step(state, A, config)
            if config.archive:
                X_archive.append(state.X.copy())
                R_archive.append(state.R.copy())
            if radau is not None:
                bounds.radau_step(radau, record)
                radau_series.append(radau.ThetaMu_prev)
        except BcgError as e:
            raise SolverError(finish(str(e)), f"iteration {state.k + 1}: {e}") from e
        if state.k % config.recompute_interval == 0:
            true_R = B - spmm(A, state.X)
            record.true_residual_gap = frob(true_R - state.R) / max(
                frob(true_R), Tol.FLOOR
            )
            if record.true_residual_gap > Tol.STAGNATION and stagnation_index is None:
                stagnation_index = state.k
                warnings.warn(
                    f"maximum attainable accuracy reached near iteration {state.k}",
                    BoundsWarning,
                )
                if config.stop_on_stagnation:
                    break
        # a residual at roundoff level cannot be iterated further
        if record.residual_fro <= Tol.SINGULAR * bnorm or _converged(
            state.history, config, bnorm
        ):
            converged = True
            break
    return finish()


def phi_chain(history: list[IterationRecord]) -> list[SmallBlock]:
    """Phi_0..Phi_K as upper Cholesky factors of R_k^T R_k (the QR R factors).

    Raises:
        SingularPhi: some R_k^T R_k is not positive definite.
    """
    grams = [r.RtR for r in history] + ([history[-1].RtR_next] if history else [])
    phis = []
    for k, G in enumerate(grams):
        try:
            phis.append(cholesky(sym(G)).T)
        except NotPositiveDefinite as e:
            raise SingularPhi(f"R_{k} is rank deficient") from e
    return phis


def bridge_deltas(
    history: list[IterationRecord], phis: list[SmallBlock] | None = None
) -> tuple[list[SmallBlock], list[SmallBlock]]:
    """Delta_k = Phi_{k-1} Upsilon_{k-1}^{-1} Phi_{k-1}^{-1} and
    Gamma_k = Phi_k Upsilon_{k-1}^{-1} Phi_{k-1}^{-1} for k = 1..K."""
    phis = phi_chain(history) if phis is None else phis
    deltas, gammas = [], []
    for k, record in enumerate(history, start=1):
        if record.Upsilon is None:
            raise SingularPhi(f"Upsilon_{k - 1} is not available")
        M = phis[k - 1] @ record.Upsilon
        try:
            deltas.append(solve_small(M.T, phis[k - 1].T).T)
            gammas.append(solve_small(M.T, phis[k].T).T)
        except Singular as e:
            raise SingularPhi(f"Phi_{k - 1} Upsilon_{k - 1} is singular") from e
    return deltas, gammas


def coefficient_bridge(
    history: list[IterationRecord], phis: list[SmallBlock] | None = None
) -> BlockTridiagonal:
    """Block Lanczos coefficients reconstructed from BCG records.

    Args:
        history (list[IterationRecord]): K records.
        phis (list[SmallBlock] | None, optional): Phi_0..Phi_K with
            Phi_k^T Phi_k = R_k^T R_k. Defaults to the triangular chain of
            `phi_chain`; pass the Lanczos-consistent chain to compare blockwise
            with a block Lanczos run.

    Returns:
        BlockTridiagonal: T_K with its coupling Gamma_K.
    """
    phis = phi_chain(history) if phis is None else phis
    deltas, gammas = bridge_deltas(history, phis)
    T = BlockTridiagonal(m=deltas[0].shape[0]) if deltas else BlockTridiagonal(m=0)
    for k, record in enumerate(history, start=1):
        Omega = deltas[k - 1]
        if k > 1:
            Phi = phis[k - 1]
            prev = history[k - 2]
            try:
                if prev.Xi is not None and prev.Upsilon is not None:
                    left = solve_small(Phi.T, (Phi @ prev.Xi).T).T
                    right = solve_small(Phi.T, solve_small(prev.Upsilon, Phi.T))
                    Omega = Omega + left @ right
                else:
                    G = gammas[k - 2]
                    Omega = Omega + G @ solve_small(deltas[k - 2], G.T)
            except Singular as e:
                raise SingularPhi(f"Phi_{k - 1} is singular") from e
        T.append(Omega, gammas[k - 1])
    return T
