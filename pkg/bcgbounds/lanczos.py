#!/usr/bin/env python

"""
Block Lanczos, the block tridiagonal matrix T_k, its block factorization and
the Gauss-Radau extension block.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .const import BlockVector, Default, SmallBlock
from .errors import (
    BoundsWarning,
    NonPositiveMu,
    NotPositiveDefinite,
    RankDeficient,
    ShiftNotBelowSpectrum,
    Terminated,
)
from .linalg import SparseSpd, frob, is_spd, qr_thin, solve_small, spmm, sym


@dataclass
class BlockTridiagonal:
    """T_k with diagonal blocks Omega_1..Omega_k and subdiagonal Gamma_1..Gamma_{k-1}.

    `coupling` is Gamma_k, the block linking T_k to the next (not yet
    accumulated) diagonal block; it is what the Gauss and Gauss-Radau
    extensions of T_k need.
    """

    m: int
    diag: list[SmallBlock] = field(default_factory=list)
    sub: list[SmallBlock] = field(default_factory=list)
    coupling: SmallBlock | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.diag)

    def append(self, Omega: SmallBlock, Gamma: SmallBlock | None = None) -> None:
        if self.coupling is not None:
            self.sub.append(self.coupling)
        elif self.diag:
            raise ValueError("cannot append a block without the previous coupling")
        self.diag.append(sym(np.asarray(Omega, dtype=float)))
        self.coupling = None if Gamma is None else np.asarray(Gamma, dtype=float)

    def leading(self, j: int) -> "BlockTridiagonal":
        """T_j, the leading j x j block submatrix, with its coupling Gamma_j."""
        if not 1 <= j <= self.k:
            raise ValueError(f"leading block count must be in [1, {self.k}]")
        coupling = self.sub[j - 1] if j < self.k else self.coupling
        return BlockTridiagonal(
            m=self.m, diag=self.diag[:j], sub=self.sub[: j - 1], coupling=coupling
        )

    def extended(self, Omega_next: SmallBlock) -> "BlockTridiagonal":
        """T_{k+1} built from the coupling block and a new diagonal block."""
        if self.coupling is None:
            raise ValueError("extension needs the coupling block Gamma_k")
        return BlockTridiagonal(
            m=self.m,
            diag=self.diag + [sym(np.asarray(Omega_next, dtype=float))],
            sub=self.sub + [self.coupling],
        )

    def to_dense(self) -> np.ndarray:
        m, k = self.m, self.k
        T = np.zeros((k * m, k * m))
        for j, Omega in enumerate(self.diag):
            T[j * m : (j + 1) * m, j * m : (j + 1) * m] = Omega
        for j, Gamma in enumerate(self.sub):
            T[(j + 1) * m : (j + 2) * m, j * m : (j + 1) * m] = Gamma
            T[j * m : (j + 1) * m, (j + 1) * m : (j + 2) * m] = Gamma.T
        return T


@dataclass
class BlockLdlt:
    """T_k = L diag(Delta) L^T, unit lower bidiagonal L with Pi_j = Gamma_j Delta_j^{-1}."""

    Delta: list[SmallBlock] = field(default_factory=list)
    Pi: list[SmallBlock] = field(default_factory=list)


@dataclass
class LanczosState:
    V_prev: BlockVector = field(repr=False)
    V_cur: BlockVector = field(repr=False)
    Gamma_prev: SmallBlock
    Phi_0: SmallBlock
    blocks: BlockTridiagonal
    k: int = 0
    # V_1, ..., V_{k+1}; kept only in archival mode
    basis: list[BlockVector] | None = field(default=None, repr=False)
    terminated: int | None = None

    @property
    def archival(self) -> bool:
        return self.basis is not None

    def stacked(self, k: int | None = None) -> np.ndarray:
        """The n x km basis matrix (V_1, ..., V_k)."""
        if self.basis is None:
            raise ValueError("the basis is stored in archival mode only")
        k = self.k if k is None else k
        return np.hstack(self.basis[:k])


def _right_solve(Gamma: SmallBlock, Delta: SmallBlock) -> SmallBlock:
    """Gamma Delta^{-1} for symmetric Delta."""
    return solve_small(Delta, Gamma.T).T


def lanczos_init(A: SparseSpd, V: BlockVector, archival: bool = False) -> LanczosState:
    """V_1 Gamma_0 = V; Gamma_0 is kept as Phi_0 (V = R_0 gives V_1 = R_0 Phi_0^{-1})."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    V1, Gamma0 = qr_thin(V)
    m = V1.shape[1]
    return LanczosState(
        V_prev=np.zeros_like(V1),
        V_cur=V1,
        Gamma_prev=Gamma0,
        Phi_0=Gamma0,
        blocks=BlockTridiagonal(m=m),
        basis=[V1] if archival else None,
    )


def lanczos_step(
    state: LanczosState, A: SparseSpd, reorthogonalize: bool = False
) -> LanczosState:
    """One block Lanczos step; appends Omega_k and the coupling Gamma_k.

    A rank deficient W_k means an invariant subspace was reached: the step
    records Omega_k with a zero coupling block and sets `state.terminated`.
    Stepping a terminated state raises `Terminated`.
    """
    if state.terminated is not None:
        raise Terminated(state.terminated)
    if reorthogonalize and not state.archival:
        raise ValueError("full reorthogonalization needs an archival state")
    AV = spmm(A, state.V_cur)
    W = AV - state.V_prev @ state.Gamma_prev.T
    Omega = sym(state.V_cur.T @ W)
    W = W - state.V_cur @ Omega
    if reorthogonalize:
        for _ in range(2):
            for Vj in state.basis:
                W = W - Vj @ (Vj.T @ W)
    k = state.k + 1
    try:
        V_next, Gamma = qr_thin(W, scale=frob(AV))
    except RankDeficient:
        m = state.blocks.m
        state.blocks.append(Omega, np.zeros((m, m)))
        state.k = k
        state.terminated = k
        warnings.warn(f"block Lanczos terminated at k={k}", BoundsWarning)
        return state
    state.blocks.append(Omega, Gamma)
    state.V_prev, state.V_cur = state.V_cur, V_next
    state.Gamma_prev = Gamma
    state.k = k
    if state.archival:
        state.basis.append(V_next)
    return state


def lanczos_run(
    A: SparseSpd,
    V: BlockVector,
    steps: int,
    reorthogonalize: bool = False,
    archival: bool | None = None,
) -> LanczosState:
    """Run up to `steps` block Lanczos steps (fewer if it terminates)."""
    state = lanczos_init(A, V, archival=reorthogonalize if archival is None else archival)
    while state.k < steps and state.terminated is None:
        lanczos_step(state, A, reorthogonalize=reorthogonalize)
    return state


def block_ldlt(T: BlockTridiagonal) -> BlockLdlt:
    """Delta_1 = Omega_1, Delta_j = Omega_j - Gamma_{j-1} Delta_{j-1}^{-1} Gamma_{j-1}^T.

    Raises:
        NotPositiveDefinite: Delta_j fails Cholesky; `pivot` is the 0-based
            block index j - 1, as in `cholesky`.
    """
    ldlt = BlockLdlt()
    for j, Omega in enumerate(T.diag, start=1):
        if j == 1:
            Delta = sym(Omega)
        else:
            Gamma = T.sub[j - 2]
            Pi = _right_solve(Gamma, ldlt.Delta[-1])
            ldlt.Pi.append(Pi)
            Delta = sym(Omega - Pi @ Gamma.T)
        if not is_spd(Delta):
            raise NotPositiveDefinite(j - 1, f"Delta_{j} is not positive definite")
        ldlt.Delta.append(Delta)
    return ldlt


def _solve_unit_block(
    T: BlockTridiagonal, ldlt: BlockLdlt, j: int
) -> list[SmallBlock]:
    """Blocks Y_1..Y_k of Y = T^{-1} E_j (j is 1-based)."""
    k, m = T.k, T.m
    Z = [np.zeros((m, m)) for _ in range(k)]
    Z[j - 1] = np.eye(m)
    for i in range(j, k):
        Z[i] = -ldlt.Pi[i - 1] @ Z[i - 1]
    Y = [solve_small(ldlt.Delta[i], Z[i]) for i in range(k)]
    for i in range(k - 2, -1, -1):
        Y[i] = Y[i] - ldlt.Pi[i].T @ Y[i + 1]
    return Y


def first_block_column(T: BlockTridiagonal) -> list[SmallBlock]:
    """Blocks of T_k^{-1} E_1."""
    return _solve_unit_block(T, block_ldlt(T), 1)


def inv11(T: BlockTridiagonal) -> SmallBlock:
    """[T_k^{-1}]_{1,1} through the block factorization of T_k."""
    return sym(first_block_column(T)[0])


def inv11_update(
    T: BlockTridiagonal, Omega_next: SmallBlock, Gamma_k: SmallBlock
) -> SmallBlock:
    """[T_{k+1}^{-1}]_{1,1} - [T_k^{-1}]_{1,1} by the Sherman-Morrison-Woodbury formula."""
    m = T.m
    Gamma_k = np.asarray(Gamma_k, dtype=float)
    if not np.any(Gamma_k):
        return np.zeros((m, m))
    ldlt = block_ldlt(T)
    Y = _solve_unit_block(T, ldlt, T.k)
    schur = np.asarray(Omega_next, dtype=float) - Gamma_k @ Y[-1] @ Gamma_k.T
    left = Y[0] @ Gamma_k.T
    return sym(left @ solve_small(schur, left.T))


def shifted_factor(T: BlockTridiagonal, mu: float) -> list[SmallBlock]:
    """Diagonal blocks of the block factorization of T_k - mu I.

    Raises:
        ShiftNotBelowSpectrum: some block is not positive definite, i.e. mu is
            not below the smallest Ritz value.
    """
    shift = mu * np.eye(T.m)
    blocks = []
    for j, Omega in enumerate(T.diag, start=1):
        D = Omega - shift
        if j > 1:
            Gamma = T.sub[j - 2]
            D = D - Gamma @ solve_small(blocks[-1], Gamma.T)
        D = sym(D)
        if not is_spd(D):
            raise ShiftNotBelowSpectrum(j, mu)
        blocks.append(D)
    return blocks


def radau_extend(
    T: BlockTridiagonal, mu: float, Gamma_k: SmallBlock | None = None
) -> SmallBlock:
    """Omega_{k+1}^{(mu)} = mu I + Gamma_k [(T_k - mu I)^{-1}]_{k,k} Gamma_k^T.

    The (k, k) block of the shifted inverse is the inverse of the last block of
    the shifted factorization; nothing is inverted densely.
    """
    if not mu > 0:
        raise NonPositiveMu(f"mu must be positive, got {mu!r}")
    Gamma = T.coupling if Gamma_k is None else np.asarray(Gamma_k, dtype=float)
    if Gamma is None:
        raise ValueError("radau_extend needs the coupling block Gamma_k")
    last = shifted_factor(T, mu)[-1]
    return sym(mu * np.eye(T.m) + Gamma @ solve_small(last, Gamma.T))


def radau_matrix(T: BlockTridiagonal, mu: float) -> BlockTridiagonal:
    """The extended matrix T_{k+1}^{(mu)}."""
    return T.extended(radau_extend(T, mu))


def certify_shift(T: BlockTridiagonal, steps: int = Default.MU_BISECTIONS) -> float:
    """Largest bisection point mu for which T_k - mu I factors as SPD.

    The result is below the smallest Ritz value of T_k; it is not a certified
    underestimate of the smallest eigenvalue of A.
    """
    hi = min(float(np.min(np.diag(Omega))) for Omega in T.diag)
    lo = 0.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        try:
            shifted_factor(T, mid)
        except ShiftNotBelowSpectrum:
            hi = mid
        else:
            lo = mid
    if lo <= 0:
        raise ShiftNotBelowSpectrum(1, lo)
    return lo
