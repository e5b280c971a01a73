#!/usr/bin/env python

"""
Problem ingestion: Matrix Market files, the 5-point Poisson matrix, seeded
right-hand sides and dense reference solutions.
"""

from dataclasses import dataclass, field
import io
from pathlib import Path
from typing import IO

import numpy as np
from scipy import linalg as sla
from scipy import sparse

from .const import BlockVector, Default, StrPath
from .errors import (
    BadHeader,
    MissingMatrixFile,
    NonSquare,
    NotPositiveDefinite,
    NotSymmetric,
    PatternOrComplexUnsupported,
    PersistentRankDeficiency,
    RankDeficient,
    TooLarge,
)
from .linalg import SparseSpd, frob, qr_thin, spmm


MM_BANNER = "%%MatrixMarket"


@dataclass
class ProblemInstance:
    A: SparseSpd
    B: BlockVector
    X_true: BlockVector | None = field(default=None, repr=False)
    lambda_min_hint: float | None = None
    name: str = "problem"

    def __post_init__(self) -> None:
        self.B = np.asarray(self.B, dtype=float)
        if self.B.ndim == 1:
            self.B = self.B[:, None]
        if self.lambda_min_hint is not None and not self.lambda_min_hint > 0:
            raise ValueError("lambda_min_hint must be positive")
        if self.X_true is not None:
            resid = frob(spmm(self.A, self.X_true) - self.B)
            if resid > 1e-10 * max(frob(self.B), 1e-300):
                raise ValueError("X_true does not solve A X = B")

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def m(self) -> int:
        return self.B.shape[1]


def _read_text(source: IO[bytes] | bytes | str) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def parse_matrix_market(source: IO[bytes] | bytes | str) -> SparseSpd:
    """Parse a real coordinate Matrix Market matrix into full CSR storage.

    Args:
        source (IO[bytes] | bytes | str): byte stream, raw bytes or text.

    Returns:
        SparseSpd: symmetric storage expanded, 0-based, duplicates summed.
    """
    lines = _read_text(source).splitlines()
    if not lines or not lines[0].startswith(MM_BANNER):
        raise BadHeader("missing %%MatrixMarket banner")
    tokens = lines[0].split()
    if len(tokens) != 5:
        raise BadHeader(f"malformed banner: {lines[0]!r}")
    _, obj, fmt, dtype, symmetry = (t.lower() for t in tokens)
    if obj != "matrix" or fmt != "coordinate":
        raise BadHeader(f"only 'matrix coordinate' is supported, got {obj} {fmt}")
    if dtype in ("pattern", "complex"):
        raise PatternOrComplexUnsupported(f"field '{dtype}' is not supported")
    if dtype not in ("real", "integer", "double"):
        raise BadHeader(f"unknown field '{dtype}'")
    if symmetry not in ("symmetric", "general"):
        raise BadHeader(f"unsupported symmetry '{symmetry}'")

    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise BadHeader("missing size line")
    try:
        nrows, ncols, nnz = (int(t) for t in body[0].split())
    except ValueError as e:
        raise BadHeader(f"malformed size line: {body[0]!r}") from e
    if nrows != ncols:
        raise NonSquare(f"matrix is {nrows} x {ncols}")
    triplets = [ln.split()[:3] for ln in body[1 : nnz + 1]]
    if len(triplets) != nnz or any(len(t) != 3 for t in triplets):
        raise BadHeader(f"expected {nnz} 'i j value' entries")
    entries = np.array(triplets, dtype=float).reshape(nnz, 3)
    rows = entries[:, 0].astype(int) - 1
    cols = entries[:, 1].astype(int) - 1
    vals = entries[:, 2]

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    coo = sparse.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols))
    csr = coo.tocsr()
    if symmetry == "general":
        scale = max(float(np.abs(csr.data).max(initial=0.0)), 1e-300)
        if abs(csr - csr.T).max() > 1e-12 * scale:
            raise NotSymmetric("general matrix is not symmetric")
    return SparseSpd(csr)


def read_matrix_market(path: StrPath) -> SparseSpd:
    path = Path(path)
    if not path.is_file():
        raise MissingMatrixFile(path)
    with open(path, "rb") as f:
        return parse_matrix_market(f)


def write_matrix_market(A: SparseSpd, stream: IO[str] | None = None) -> str:
    """Write the lower triangle in 'coordinate real symmetric' format."""
    lower = sparse.tril(A.csr).tocoo()
    order = np.lexsort((lower.row, lower.col))
    buf = io.StringIO()
    buf.write(f"{MM_BANNER} matrix coordinate real symmetric\n")
    buf.write(f"{A.n} {A.n} {lower.nnz}\n")
    for i, j, v in zip(lower.row[order], lower.col[order], lower.data[order]):
        buf.write(f"{i + 1} {j + 1} {v:.17g}\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def poisson2d(k: int) -> SparseSpd:
    """Unscaled 5-point Laplacian on a k x k interior mesh (Dirichlet)."""
    if k < 1:
        raise ValueError(f"mesh size must be positive, got {k}")
    T = sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(k, k))
    eye = sparse.identity(k)
    return SparseSpd(sparse.kron(eye, T) + sparse.kron(T, eye))


def poisson2d_eigenvalues(k: int) -> np.ndarray:
    """Closed-form spectrum 4(sin^2(i pi / 2(k+1)) + sin^2(j pi / 2(k+1)))."""
    s = np.sin(np.arange(1, k + 1) * np.pi / (2 * (k + 1))) ** 2
    return np.sort((4 * (s[:, None] + s[None, :])).ravel())


def random_rhs(
    n: int, m: int, seed: int, attempts: int = Default.RHS_ATTEMPTS
) -> BlockVector:
    """Uniform [-1, 1] block of right-hand sides with full column rank.

    Entries come from numpy's PCG64 stream `default_rng(seed)`; a rank
    deficient draw is replaced by the next draw of the same stream.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        B = rng.uniform(low=-1.0, high=1.0, size=(n, m))
        try:
            qr_thin(B)
        except RankDeficient:
            continue
        return B
    raise PersistentRankDeficiency(f"no full-rank draw after {attempts} attempts")


def dense_reference_solve(A: SparseSpd, B: BlockVector) -> BlockVector:
    """Truth data by dense Cholesky, independent of the Krylov code."""
    if A.n > Default.DENSE_LIMIT:
        raise TooLarge(f"dense reference solve limited to n <= {Default.DENSE_LIMIT}")
    B = np.asarray(B, dtype=float)
    try:
        factor = sla.cho_factor(A.toarray(), lower=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(-1, str(e)) from e
    X = sla.cho_solve(factor, B)
    if frob(spmm(A, X) - B) > 1e-10 * max(frob(B), 1e-300):
        raise NotPositiveDefinite(-1, "reference residual too large")
    return X
