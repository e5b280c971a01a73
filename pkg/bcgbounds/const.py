#!/usr/bin/env python

"""
Constant classes
"""

from enum import Enum, IntEnum, unique
from pathlib import Path

import numpy as np


StrPath = str | Path
# dense m x m coefficient block (Greek letters of the recurrences)
SmallBlock = np.ndarray
# n x m block of column vectors (X_k, R_k, P_k, V_k, ...)
BlockVector = np.ndarray


@unique
class Variant(Enum):
    bcg = "standard BCG"
    olbcg = "O'Leary BCG"
    drbcg = "Dubrulle-R BCG"


@unique
class SigmaPolicy(Enum):
    identity = "identity scaling"
    qr = "inverse R factor of the direction block"


@unique
class Experiment(Enum):
    poisson = "Poisson 30x30"
    bcsstk01 = "bcsstk01"
    bus662 = "662_bus"
    nos7 = "nos7"


@unique
class Check(Enum):
    gauss_identity = "block Gauss quadrature identity"
    radau_identity = "block Gauss-Radau quadrature identity"
    lanczos_link = "Lanczos basis / BCG residual link"
    coefficients = "Lanczos / BCG coefficient relations"
    radau_eigen = "Gauss-Radau extension eigenstructure"
    inverse_lemma = "inverse difference lemma"
    telescoping = "error matrix telescoping"


class ExitCode(IntEnum):
    OK = 0
    MAX_ITER = 2
    SOLVER_ERROR = 3
    VERIFY_FAILED = 1
    USAGE = 64
    IO = 74


class Tol:
    SYM: float = 1e-12
    RANK: float = 1e-12
    SINGULAR: float = 1e-14
    ORTH: float = 1e-10
    FLOOR: float = 1e-300
    JACOBI_OFF: float = 1e-12
    JACOBI_SWEEPS: int = 100
    COND: float = 1e14
    STAGNATION: float = 1e-6
    VERIFY: float = 1e-8
    LEMMA: float = 1e-10


class Default:
    VARIANT: Variant = Variant.bcg
    SIGMA: SigmaPolicy = SigmaPolicy.identity
    MAX_ITER: int = 500
    TOL: float = 1e-10
    DELAY: int = 1
    RECOMPUTE_INTERVAL: int = 50
    SEED: int = 1
    BLOCK_SIZE: int = 2
    MESH: int = 4
    DENSE_LIMIT: int = 5000
    EIGEN_LIMIT: int = 2000
    RHS_ATTEMPTS: int = 3
    MU_BISECTIONS: int = 20
    VERIFY_STEPS: int = 7
    LEMMA_SEEDS: int = 100
    LEMMA_BLOCK: int = 3
    CSV_COLUMNS: tuple[str] = (
        "iter",
        "col",
        "true_err",
        "gauss_lb",
        "radau_ub",
        "gauss_valid",
        "radau_valid",
    )
