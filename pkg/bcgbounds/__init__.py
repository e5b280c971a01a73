#!/usr/bin/env python

from .__version__ import __version__  # noqa: F401
from .bcg import SolveResult, SolverConfig, coefficient_bridge, solve  # noqa: F401
from .bounds import BoundSeries, delayed_bounds, true_error_matrix  # noqa: F401
from .linalg import SparseSpd  # noqa: F401
from .matrix_io import (  # noqa: F401
    ProblemInstance,
    poisson2d,
    random_rhs,
    read_matrix_market,
)
