#!/usr/bin/env python

"""
Exceptions and warning categories
"""


class BoundsWarning(UserWarning):
    """Non-fatal numerical condition (stagnation, lost validity, termination)."""


class BcgError(Exception):
    pass


class DimensionMismatch(BcgError, ValueError):
    pass


class RankDeficient(BcgError):
    def __init__(self, column: int, msg: str | None = None) -> None:
        self.column = column
        super().__init__(msg or f"rank deficient at column {column}")


class NotPositiveDefinite(BcgError):
    def __init__(self, pivot: int, msg: str | None = None) -> None:
        self.pivot = pivot
        super().__init__(msg or f"not positive definite at pivot {pivot}")


class Singular(BcgError):
    pass


class NoConvergence(BcgError):
    def __init__(self, sweeps: int) -> None:
        self.sweeps = sweeps
        super().__init__(f"Jacobi sweeps did not converge after {sweeps} sweeps")


class BadHeader(BcgError, ValueError):
    pass


class NonSquare(BcgError, ValueError):
    pass


class NotSymmetric(BcgError, ValueError):
    pass


class PatternOrComplexUnsupported(BcgError, ValueError):
    pass


class PersistentRankDeficiency(BcgError):
    pass


class TooLarge(BcgError):
    pass


class MissingMatrixFile(BcgError, FileNotFoundError):
    def __init__(self, path) -> None:
        self.path = path
        super().__init__(f"matrix file not found: {path}")


class ShiftNotBelowSpectrum(BcgError):
    def __init__(self, block: int, mu: float) -> None:
        self.block = block
        self.mu = mu
        super().__init__(
            f"shifted factor block {block} is not positive definite for mu={mu!r}"
        )


class Terminated(BcgError):
    """Block Lanczos reached an invariant subspace after `q` iterations."""

    def __init__(self, q: int) -> None:
        self.q = q
        super().__init__(f"block Lanczos terminated after {q} iterations")


class NearSingularCoefficient(BcgError):
    def __init__(self, which: str, condition: float) -> None:
        self.which = which
        self.condition = condition
        super().__init__(f"{which} is near singular (condition ~ {condition:.3e})")


class SingularSigma(BcgError):
    pass


class SingularPhi(BcgError):
    pass


class SingularBracket(BcgError):
    pass


class NonPositiveMu(BcgError, ValueError):
    pass


class InsufficientHistory(BcgError):
    pass


class SolverError(BcgError):
    """A failure inside `bcg.solve`; `result` holds the partial run."""

    def __init__(self, result, msg: str) -> None:
        self.result = result
        super().__init__(msg)
