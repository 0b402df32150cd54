"""Automatic per-row / per-column regularization weights.

Each weight is driven by the same fixed-point rule as the scalar lambda
iteration in :mod:`tikhonov_nmf.tikhonov_ls`, applied to one row of ``B``
(``beta_m``) or one column of ``C`` (``alpha_n``)::

    beta_m  <- |gamma_m| * ||a_m - b_m C||^2 / (||b_m||^2 + delta_b)
    alpha_n <- |gamma_n| * ||a_n - B c_n||^2 / (||c_n||^2 + delta_c)

Starting from zero weights gives increasing sequences that settle at the
nearest L-corner, so ``zeros`` is the default initialization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Literal

import numpy as np
import numpy.typing as npt

from .errors import InsufficientDataError, InvalidParameterError, NonFiniteError
from .matrix_core import DenseMatrix, RegParams, check_factor_shapes

if TYPE_CHECKING:
    from .nmf_engine import FactorPair

logger = logging.getLogger(__name__)

Vector = npt.NDArray[np.float64]


def _guarded_ratio(numerator: Vector, denominator: Vector, what: str) -> Vector:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = numerator / denominator
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(
            f"{what} update produced non-finite weights; use a positive delta", field=what
        )
    return out


def update_beta(a: DenseMatrix, factors: FactorPair, gamma_b: Vector, delta_b: float) -> Vector:
    """Row weights from the current ``B`` and ``C``.

    In the factorization loop ``factors.b`` is the freshly updated ``B`` and
    ``factors.c`` the ``C`` from before this iteration's C step.
    """
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c)
    residual = a - b @ c
    num = np.abs(gamma_b) * np.einsum("ij,ij->i", residual, residual)
    return _guarded_ratio(num, np.einsum("ij,ij->i", b, b) + delta_b, "beta")


def update_alpha(a: DenseMatrix, factors: FactorPair, gamma_c: Vector, delta_c: float) -> Vector:
    """Column weights from the updated ``B`` and ``C``."""
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c)
    residual = a - b @ c
    num = np.abs(gamma_c) * np.einsum("ij,ij->j", residual, residual)
    return _guarded_ratio(num, np.einsum("ij,ij->j", c, c) + delta_c, "alpha")


def fixed_point_residual(
    a: DenseMatrix,
    factors: FactorPair,
    params: RegParams,
    gamma_b: Vector,
    gamma_c: Vector,
    delta_b: float,
    delta_c: float,
) -> tuple[Vector, Vector]:
    """Per-index gaps ``|beta_m (||b_m||^2 + delta_b) - |gamma_m| ||a_m - b_m C||^2|``.

    Zero at an L-corner of the delta-guarded update; the alpha gaps are the
    column-wise mirror.
    """
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c, params)
    residual = a - b @ c
    beta_gap = np.abs(
        params.beta * (np.einsum("ij,ij->i", b, b) + delta_b)
        - np.abs(gamma_b) * np.einsum("ij,ij->i", residual, residual)
    )
    alpha_gap = np.abs(
        params.alpha * (np.einsum("ij,ij->j", c, c) + delta_c)
        - np.abs(gamma_c) * np.einsum("ij,ij->j", residual, residual)
    )
    return beta_gap, alpha_gap


def init_regularization(
    m: int,
    n: int,
    strategy: Literal["zeros", "provided"] = "zeros",
    *,
    beta: npt.ArrayLike | None = None,
    alpha: npt.ArrayLike | None = None,
) -> RegParams:
    if m < 1 or n < 1:
        raise InvalidParameterError("dimensions must be positive")
    if strategy == "zeros":
        return RegParams.zeros(m, n)
    if strategy == "provided":
        if beta is None or alpha is None:
            raise InvalidParameterError("provided strategy needs both beta and alpha")
        params = RegParams(beta, alpha)
        params.check_shape(m, n)
        return params
    raise InvalidParameterError(f"unknown regularization init strategy {strategy!r}")


class TrajectoryDirection(str, Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONVERGED = "converged"
    NON_MONOTONE = "non-monotone"


@dataclass(slots=True)
class ParamTrajectory:
    """Snapshots of ``beta`` and ``alpha``, one per completed iteration."""

    betas: list[Vector] = field(default_factory=list)
    alphas: list[Vector] = field(default_factory=list)

    def append(self, params: RegParams) -> None:
        self.betas.append(params.beta)
        self.alphas.append(params.alpha)

    def __len__(self) -> int:
        return len(self.betas)

    def is_stabilized(self, rtol: float = 1e-10) -> bool:
        """True when the last two snapshots agree within ``rtol`` relative."""
        if len(self) < 2:
            return False
        return all(
            np.all(np.abs(cur - prev) <= rtol * np.maximum(np.abs(cur), np.abs(prev)))
            for cur, prev in (
                (self.betas[-1], self.betas[-2]),
                (self.alphas[-1], self.alphas[-2]),
            )
        )


@dataclass(slots=True)
class TrajectoryLabels:
    beta: list[TrajectoryDirection]
    alpha: list[TrajectoryDirection]

    def count(self, direction: TrajectoryDirection) -> int:
        return self.beta.count(direction) + self.alpha.count(direction)


def _label_columns(snapshots: np.ndarray, tol: float) -> list[TrajectoryDirection]:
    steps = np.diff(snapshots, axis=0)
    scale = tol * (1.0 + np.abs(snapshots[:-1]))
    up = np.any(steps > scale, axis=0)
    down = np.any(steps < -scale, axis=0)
    labels = []
    for rising, falling in zip(up, down):
        if rising and falling:
            labels.append(TrajectoryDirection.NON_MONOTONE)
        elif rising:
            labels.append(TrajectoryDirection.INCREASING)
        elif falling:
            labels.append(TrajectoryDirection.DECREASING)
        else:
            labels.append(TrajectoryDirection.CONVERGED)
    return labels


def classify_trajectory(trajectory: ParamTrajectory, tol: float) -> TrajectoryLabels:
    """Label each beta_m / alpha_n sequence by its direction of travel.

    Steps within ``tol * (1 + value)`` are ignored. Non-monotone sequences are
    logged, never fatal: the single inner steps of the factorization loop are
    not exact subproblem solves, so monotonicity is not guaranteed there.
    """
    if len(trajectory) < 2:
        raise InsufficientDataError("classify_trajectory needs at least 2 snapshots")
    labels = TrajectoryLabels(
        beta=_label_columns(np.vstack(trajectory.betas), tol),
        alpha=_label_columns(np.vstack(trajectory.alphas), tol),
    )
    non_monotone = labels.count(TrajectoryDirection.NON_MONOTONE)
    if non_monotone:
        logger.info("%d regularization weight sequences are non-monotone", non_monotone)
    return labels
