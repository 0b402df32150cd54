from .config import LambdaConfig, Settings, SolverConfig, load_settings
from .diagnostics import IterationTrace, export_trace_csv, load_trace_csv, record_iteration
from .errors import (
    DegenerateDenominatorError,
    InsufficientDataError,
    InvalidParameterError,
    MatrixFormatError,
    NegativeEntryError,
    NonFiniteError,
    ShapeMismatchError,
    SingularSystemError,
    TikhonovNMFError,
)
from .factorizer import TikhonovNMF
from .matrix_core import RegParams, grad_b, grad_c, objective_j
from .matrix_io import MatrixFileFormat, read_matrix, write_matrix
from .nmf_engine import FactorizationResult, FactorPair, KktResidual, Termination, factorize
from .regularizer import ParamTrajectory, TrajectoryDirection, classify_trajectory
from .tikhonov_ls import (
    LambdaIterationResult,
    LambdaStatus,
    LCurvePoint,
    LinearInverseProblem,
    iterate_lambda,
    lcurve_sweep,
    solve_regularized,
)

__all__ = [
    "DegenerateDenominatorError",
    "FactorizationResult",
    "FactorPair",
    "InsufficientDataError",
    "InvalidParameterError",
    "IterationTrace",
    "KktResidual",
    "LambdaConfig",
    "LambdaIterationResult",
    "LambdaStatus",
    "LCurvePoint",
    "LinearInverseProblem",
    "MatrixFileFormat",
    "MatrixFormatError",
    "NegativeEntryError",
    "NonFiniteError",
    "ParamTrajectory",
    "RegParams",
    "Settings",
    "ShapeMismatchError",
    "SingularSystemError",
    "SolverConfig",
    "Termination",
    "TikhonovNMF",
    "TikhonovNMFError",
    "TrajectoryDirection",
    "classify_trajectory",
    "export_trace_csv",
    "factorize",
    "grad_b",
    "grad_c",
    "iterate_lambda",
    "lcurve_sweep",
    "load_settings",
    "load_trace_csv",
    "objective_j",
    "read_matrix",
    "record_iteration",
    "solve_regularized",
    "write_matrix",
]
