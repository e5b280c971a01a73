#!/usr/bin/env python

"""
Dense small-block kernels and the sparse SPD block product.

All tolerances are relative to the Frobenius norm of the operand with an
absolute floor of `Tol.FLOOR`.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import linalg as sla
from scipy import sparse
from scipy.linalg import lapack

from .const import BlockVector, Default, SmallBlock, Tol
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    Singular,
    TooLarge,
)


def frob(M: np.ndarray) -> float:
    return float(np.linalg.norm(M))


def sym(S: SmallBlock) -> SmallBlock:
    """Symmetric part (S + S^T) / 2."""
    return 0.5 * (S + S.T)


def relative_deviation(
    a: np.ndarray, b: np.ndarray, scale: float | None = None
) -> float:
    """||a - b||_F relative to `scale` (defaults to ||b||_F)."""
    ref = frob(b) if scale is None else scale
    return frob(np.asarray(a) - np.asarray(b)) / max(ref, Tol.FLOOR)


def check_symmetric(S: SmallBlock) -> None:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {S.shape}")
    scale = max(float(np.max(np.abs(S), initial=0.0)), Tol.FLOOR)
    if np.max(np.abs(S - S.T), initial=0.0) > Tol.SYM * scale:
        raise NotSymmetric("matrix is not symmetric to working tolerance")


def qr_thin(
    M: np.ndarray, scale: float | None = None, check_rank: bool = True
) -> tuple[np.ndarray, SmallBlock]:
    """Thin Householder QR with a nonnegative diagonal of R.

    Args:
        M (np.ndarray): n x m matrix with n >= m.
        scale (float | None, optional): reference magnitude for the rank test
            when ||M||_F alone is not meaningful (e.g. a Lanczos residual block
            that cancelled down to roundoff). Defaults to None.
        check_rank (bool, optional): raise on a negligible diagonal entry of R.
            Defaults to True.

    Returns:
        tuple[np.ndarray, SmallBlock]: Q with orthonormal columns and upper
            triangular R such that M = Q R.

    Raises:
        RankDeficient: |R_jj| <= Tol.RANK * max(||M||_F, scale).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    n, m = M.shape
    if n < m:
        raise DimensionMismatch(f"qr_thin needs n >= m, got {n} x {m}")
    Q, R = np.linalg.qr(M, mode="reduced")
    # flip so that diag(R) >= 0
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q = Q * signs
    R = R * signs[:, None]
    if check_rank:
        ref = max(frob(M), scale or 0.0, Tol.FLOOR)
        bad = np.flatnonzero(np.abs(np.diag(R)) <= Tol.RANK * ref)
        if bad.size:
            raise RankDeficient(int(bad[0]))
    return Q, R


def cholesky(S: SmallBlock) -> SmallBlock:
    """Lower Cholesky factor L with S = L L^T.

    Raises:
        NotSymmetric: S is not symmetric to `Tol.SYM`.
        NotPositiveDefinite: a pivot is not positive (0-based pivot index).
    """
    S = np.asarray(S, dtype=float)
    check_symmetric(S)
    L, info = lapack.dpotrf(S, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to dpotrf")
    return L


def is_spd(S: SmallBlock) -> bool:
    """Positive definiteness test of the symmetric part of S via Cholesky."""
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        return False
    try:
        cholesky(sym(S))
    except NotPositiveDefinite:
        return False
    return True


def condition_estimate(S: SmallBlock) -> float:
    """Ratio of the extreme Cholesky diagonal entries of an SPD block."""
    try:
        d = np.diag(cholesky(sym(np.asarray(S, dtype=float))))
    except NotPositiveDefinite:
        return math.inf
    return float(d.max() / d.min())


def solve_small(S: SmallBlock, RHS: np.ndarray) -> np.ndarray:
    """Solve S X = RHS with LU and partial pivoting; inverses are never formed.

    Raises:
        Singular: a pivot magnitude is <= Tol.SINGULAR * ||S||_F.
    """
    S = np.asarray(S, dtype=float)
    RHS = np.asarray(RHS, dtype=float)
    if S.shape[0] != S.shape[1] or S.shape[0] != RHS.shape[0]:
        raise DimensionMismatch(f"cannot solve {S.shape} against {RHS.shape}")
    if not np.all(np.isfinite(S)):
        raise Singular("matrix has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(S)
    if np.min(np.abs(np.diag(lu))) <= Tol.SINGULAR * max(frob(S), Tol.FLOOR):
        raise Singular("pivot below working tolerance")
    return sla.lu_solve((lu, piv), RHS)


@dataclass
class SparseSpd:
    """Symmetric positive definite matrix in full CSR storage."""

    csr: sparse.csr_matrix
    n: int = field(init=False)

    def __post_init__(self) -> None:
        csr = sparse.csr_matrix(self.csr, dtype=float)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        self.csr = csr
        self.n = csr.shape[0]
        pattern = csr.copy()
        pattern.data[:] = 1.0
        if (pattern - pattern.T).count_nonzero():
            raise NotSymmetric("sparsity pattern is not symmetric")
        diag = csr.diagonal()
        bad = np.flatnonzero(diag <= 0)
        if bad.size:
            raise NotPositiveDefinite(
                int(bad[0]), "diagonal entries must be present and positive"
            )

    @classmethod
    def from_dense(cls, A: np.ndarray) -> "SparseSpd":
        return cls(sparse.csr_matrix(np.asarray(A, dtype=float)))

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


def spmm(A: SparseSpd, X: BlockVector) -> BlockVector:
    """A @ X, accumulated row by row in increasing column-index order."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] != A.n:
        raise DimensionMismatch(f"A is {A.n} x {A.n} but X has {X.shape[0]} rows")
    return np.asarray(A.csr @ X)


def smallest_eigenvalue(A: SparseSpd) -> float:
    """lambda_1 of A from a dense symmetric eigensolve (desk scale only)."""
    if A.n > Default.DENSE_LIMIT:
        raise TooLarge(f"dense eigensolve limited to n <= {Default.DENSE_LIMIT}")
    return float(sla.eigh(A.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0])


def jacobi_eigen(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for dense symmetric matrices.

    Args:
        S (np.ndarray): symmetric p x p matrix, p <= Default.EIGEN_LIMIT.

    Returns:
        tuple[np.ndarray, np.ndarray]: eigenvalues in ascending order and the
            matching orthonormal eigenvectors as columns.

    Raises:
        NoConvergence: off-diagonal norm still above tolerance after
            `Tol.JACOBI_SWEEPS` sweeps.
    """
    a = np.array(S, dtype=float)
    check_symmetric(a)
    p = a.shape[0]
    if p > Default.EIGEN_LIMIT:
        raise TooLarge(f"jacobi_eigen is limited to order {Default.EIGEN_LIMIT}")
    a = sym(a)
    V = np.eye(p)
    ref = max(frob(a), Tol.FLOOR)
    for _ in range(Tol.JACOBI_SWEEPS):
        if frob(a - np.diag(np.diag(a))) <= Tol.JACOBI_OFF * ref:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if abs(aij) < Tol.FLOOR:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                col_i, col_j = a[:, i].copy(), a[:, j].copy()
                a[:, i] = c * col_i - s * col_j
                a[:, j] = s * col_i + c * col_j
                row_i, row_j = a[i, :].copy(), a[j, :].copy()
                a[i, :] = c * row_i - s * row_j
                a[j, :] = s * row_i + c * row_j
                a[i, j] = a[j, i] = 0.0
                v_i, v_j = V[:, i].copy(), V[:, j].copy()
                V[:, i] = c * v_i - s * v_j
                V[:, j] = s * v_i + c * v_j
    else:
        if frob(a - np.diag(np.diag(a))) > Tol.JACOBI_OFF * ref:
            raise NoConvergence(Tol.JACOBI_SWEEPS)
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
