"""Stabilized type-I Anderson acceleration for non-expansive fixed-point
problems, with unstabilized baselines, a benchmark problem library and a
trace-writing CLI."""

from .core import (
    CONTRACTIVE,
    METHODS,
    NONEXPANSIVE,
    FixedPointProblem,
    IterationRecord,
    NormRegime,
    SolveConfig,
    SolveResult,
    km_step,
    residual,
    run,
)
from .errors import (
    AA1SError,
    DegenerateDenominatorError,
    NonFiniteIterateError,
    SingularMatrixError,
    ZeroColumnError,
    ZeroRowError,
    ZeroUpdateError,
)
from .linalg import SeededRng, equilibrate, gaussian, lu_solve, sparse_gaussian
from .problems import FAMILIES, generate

__all__ = [
    "AA1SError",
    "CONTRACTIVE",
    "DegenerateDenominatorError",
    "FAMILIES",
    "FixedPointProblem",
    "IterationRecord",
    "METHODS",
    "NONEXPANSIVE",
    "NonFiniteIterateError",
    "NormRegime",
    "SeededRng",
    "SingularMatrixError",
    "SolveConfig",
    "SolveResult",
    "ZeroColumnError",
    "ZeroRowError",
    "ZeroUpdateError",
    "equilibrate",
    "gaussian",
    "generate",
    "km_step",
    "lu_solve",
    "residual",
    "run",
    "sparse_gaussian",
]

__version__ = "0.1.0"
