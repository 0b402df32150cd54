"""Scalar-lambda Tikhonov least squares with iterative lambda selection.

Solves ``min ||y - A x||^2 + lam ||x||^2`` and drives ``lam`` to the L-curve
corner picked out by a straight line of slope ``gamma``::

    lam <- |gamma| * ||y - A x_lam||^2 / ||x_lam||^2

The same fixed-point update, applied row by row and column by column, selects
the regularization weights of the factorization engine.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt
import scipy.linalg as la
from joblib import Parallel, delayed

from .config import LambdaConfig
from .errors import (
    DegenerateDenominatorError,
    InvalidParameterError,
    NonFiniteError,
    ShapeMismatchError,
    SingularSystemError,
)
from .matrix_core import DenseMatrix, as_matrix, as_vector

logger = logging.getLogger(__name__)

Vector = npt.NDArray[np.float64]


@dataclass(slots=True)
class LinearInverseProblem:
    """``y = A x`` with design ``A`` (N x M) and observation ``y`` (length N)."""

    design: DenseMatrix
    observation: Vector

    def __post_init__(self) -> None:
        self.design = as_matrix(self.design, name="design")
        self.observation = as_vector(self.observation, name="observation")
        if self.observation.shape[0] != self.design.shape[0]:
            raise ShapeMismatchError(
                "LinearInverseProblem", self.design.shape, self.observation.shape
            )

    @property
    def n_unknowns(self) -> int:
        return self.design.shape[1]

    def residual_norm_sq(self, x: Vector) -> float:
        r = self.observation - self.design @ x
        return float(r @ r)


@dataclass(slots=True)
class LCurvePoint:
    lam: float
    residual_norm_sq: float
    solution_norm_sq: float

    def __post_init__(self) -> None:
        values = (self.lam, self.residual_norm_sq, self.solution_norm_sq)
        if not all(np.isfinite(v) and v >= 0 for v in values):
            raise NonFiniteError(f"L-curve point must be finite and nonnegative, got {values}")


class LambdaStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


@dataclass(slots=True)
class LambdaIterationResult:
    x: Vector
    lam: float
    iterations: int
    status: LambdaStatus
    lambda_history: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is LambdaStatus.CONVERGED


def solve_regularized(problem: LinearInverseProblem, lam: float) -> Vector:
    """Unique minimizer of ``||y - A x||^2 + lam ||x||^2`` via the normal equations."""
    if lam < 0 or not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be a finite value >= 0, got {lam}")
    a = problem.design
    m = problem.n_unknowns
    if lam == 0 and np.linalg.matrix_rank(a) < m:
        raise SingularSystemError(
            "A'A is singular: lambda = 0 requires a design matrix with full column rank"
        )
    gram = a.T @ a + lam * np.eye(m)
    rhs = a.T @ problem.observation
    try:
        return la.solve(gram, rhs, assume_a="pos")
    except la.LinAlgError as exc:
        raise SingularSystemError(f"normal equations are singular at lambda={lam}") from exc


def lambda_update(
    residual_norm_sq: float, solution_norm_sq: float, gamma: float, guard: float = 0.0
) -> float:
    """``|gamma| * residual_norm_sq / (solution_norm_sq + guard)``."""
    if guard < 0:
        raise InvalidParameterError("guard must be >= 0")
    denominator = solution_norm_sq + guard
    if denominator == 0:
        raise DegenerateDenominatorError(
            "solution norm is zero and no guard was given; lambda update is undefined"
        )
    return abs(gamma) * residual_norm_sq / denominator


def iterate_lambda(
    problem: LinearInverseProblem,
    config: LambdaConfig | None = None,
    *,
    x0: npt.ArrayLike | None = None,
) -> LambdaIterationResult:
    """Alternate the regularized solve and the lambda update until ``x`` settles.

    Stops when ``||x_k - x_{k-1}|| / ||x_{k-1}|| <= eps`` (absolute change when
    ``x_{k-1} = 0``), when ``max_iter`` solves were done, or when lambda exceeds
    ``divergence_limit``, which is reported rather than raised. Without an
    explicit ``x0`` the first solve is never tested against the zero start.
    """
    cfg = config or LambdaConfig()
    lam = float(cfg.lambda0)
    x_prev = np.zeros(problem.n_unknowns) if x0 is None else as_vector(x0, name="x0")
    if x_prev.shape != (problem.n_unknowns,):
        raise ShapeMismatchError("x0", x_prev.shape, (problem.n_unknowns,))

    # with no x0 the zero start is a placeholder, not an iterate
    first_tested = 1 if x0 is not None else 2
    history = [lam]
    status = LambdaStatus.MAX_ITER
    x = x_prev
    iteration = 0
    for iteration in range(1, cfg.max_iter + 1):
        x = solve_regularized(problem, lam)
        lam = lambda_update(problem.residual_norm_sq(x), float(x @ x), cfg.gamma)
        history.append(lam)

        prev_norm = float(np.linalg.norm(x_prev))
        change = float(np.linalg.norm(x - x_prev))
        if prev_norm > 0:
            change /= prev_norm
        logger.debug("lambda iteration %d: lambda=%.17g change=%.3e", iteration, lam, change)

        if lam > cfg.divergence_limit:
            logger.warning(
                "lambda diverged past %.3g after %d iterations; lambda0=%.3g may be too large",
                cfg.divergence_limit,
                iteration,
                cfg.lambda0,
            )
            status = LambdaStatus.DIVERGED
            break
        if iteration >= first_tested and change <= cfg.eps:
            status = LambdaStatus.CONVERGED
            break
        x_prev = x

    if status is LambdaStatus.MAX_ITER:
        logger.info("lambda iteration stopped at max_iter=%d without settling", cfg.max_iter)
    return LambdaIterationResult(
        x=x, lam=lam, iterations=iteration, status=status, lambda_history=history
    )


def lambda_grid(lo: float, hi: float, points: int, spacing: str = "log") -> Vector:
    """Ascending grid of ``points`` lambdas between ``lo`` and ``hi``."""
    if points < 1:
        raise InvalidParameterError("points must be >= 1")
    if lo < 0 or hi < lo:
        raise InvalidParameterError(f"need 0 <= lambda_min <= lambda_max, got {lo}, {hi}")
    if spacing == "log":
        if lo <= 0:
            raise InvalidParameterError("log spacing needs lambda_min > 0")
        return np.geomspace(lo, hi, points)
    if spacing == "linear":
        return np.linspace(lo, hi, points)
    raise InvalidParameterError(f"unknown spacing {spacing!r}")


def lcurve_sweep(
    problem: LinearInverseProblem,
    lambdas: npt.ArrayLike,
    *,
    max_workers: int = 1,
) -> list[LCurvePoint]:
    """One L-curve point per lambda, returned in input order."""
    grid = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise InvalidParameterError("lambdas must be nonnegative and ascending")

    def point(lam: float) -> LCurvePoint:
        x = solve_regularized(problem, float(lam))
        return LCurvePoint(float(lam), problem.residual_norm_sq(x), float(x @ x))

    if max_workers < 1:
        raise InvalidParameterError("max_workers must be >= 1")
    # point is a closure, so only the threading backend can run it
    return Parallel(n_jobs=max_workers, prefer="threads")(delayed(point)(lam) for lam in grid)
