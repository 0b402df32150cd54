"""Factorization drivers for ``A ~ BC`` with Tikhonov-regularized factors.

One iteration of :func:`factorize` runs, in order:

1. the B step (additive or multiplicative) with the current weights,
2. the C step using the new B,
3. the beta update from the new B and the previous C,
4. the alpha update from the new B and the new C,
5. the KKT stopping test on ``max |grad ⊙ X|``.

The additive steps scale the gradient by ``X̄ / (X̄ CC' + beta X̄ + delta)``
where ``X̄`` lifts zero entries with a negative gradient to ``sigma``; that
lift is what lets entries leave zero, which the multiplicative rule cannot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Literal

import numpy as np
import numpy.typing as npt

from .config import SolverConfig
from .diagnostics import IterationTrace, record_iteration
from .errors import (
    InvalidParameterError,
    NegativeEntryError,
    NonFiniteError,
    ShapeMismatchError,
)
from .matrix_core import (
    DenseMatrix,
    RegParams,
    as_matrix,
    check_factor_shapes,
    complementary_slackness,
    frobenius_norm_sq,
    grad_b,
    grad_c,
    hadamard_div_guarded,
    objective_j,
)
from .regularizer import (
    ParamTrajectory,
    init_regularization,
    update_alpha,
    update_beta,
)

logger = logging.getLogger(__name__)

IterationCallback = Callable[[int, "FactorPair", RegParams], None]


@dataclass(slots=True)
class FactorPair:
    """Nonnegative factors ``b`` (M x R) and ``c`` (R x N)."""

    b: DenseMatrix
    c: DenseMatrix

    def __post_init__(self) -> None:
        self.b = as_matrix(self.b, name="B")
        self.c = as_matrix(self.c, name="C")
        if self.b.shape[1] != self.c.shape[0]:
            raise ShapeMismatchError("FactorPair", self.b.shape, self.c.shape)
        if np.any(self.b < 0) or np.any(self.c < 0):
            raise NegativeEntryError("factors must be entrywise nonnegative")

    @property
    def rank(self) -> int:
        return self.b.shape[1]


@dataclass(slots=True)
class KktResidual:
    max_slack_b: float
    max_slack_c: float
    neg_grad_at_zero_b: int
    neg_grad_at_zero_c: int

    def converged(self, tol: float) -> bool:
        return self.max_slack_b <= tol and self.max_slack_c <= tol

    @property
    def is_stationary(self) -> bool:
        return (
            self.max_slack_b == 0
            and self.max_slack_c == 0
            and self.neg_grad_at_zero_b == 0
            and self.neg_grad_at_zero_c == 0
        )


class Termination(str, Enum):
    KKT_CONVERGED = "kkt_converged"
    MAX_ITER = "max_iter"


@dataclass(slots=True)
class FactorizationResult:
    factors: FactorPair
    params: RegParams
    traces: list[IterationTrace]
    termination: Termination
    trajectory: ParamTrajectory
    initial_objective: float
    initial_params: RegParams

    @property
    def converged(self) -> bool:
        return self.termination is Termination.KKT_CONVERGED

    @property
    def iterations(self) -> int:
        return len(self.traces)

    @property
    def residual_norm_sq(self) -> float:
        return self.traces[-1].residual_norm_sq

    @property
    def solution_norm_sq(self) -> tuple[float, float]:
        last = self.traces[-1]
        return last.solution_norm_sq_b, last.solution_norm_sq_c

    @property
    def objective_change(self) -> float:
        """``|J_last - J_previous|`` of the combined objective."""
        previous = (
            self.traces[-2].objective_combined if len(self.traces) > 1 else self.initial_objective
        )
        return abs(self.traces[-1].objective_combined - previous)


def multiplicative_update_b(
    a: DenseMatrix, factors: FactorPair, params: RegParams, guard: float
) -> DenseMatrix:
    """``B ⊙ (AC') / (BCC' + beta B + guard)``."""
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c, params)
    denominator = b @ (c @ c.T) + params.beta[:, None] * b
    return b * hadamard_div_guarded(a @ c.T, denominator, guard)


def multiplicative_update_c(
    a: DenseMatrix, factors: FactorPair, params: RegParams, guard: float
) -> DenseMatrix:
    """``C ⊙ (B'A) / (B'BC + C alpha + guard)``."""
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c, params)
    denominator = (b.T @ b) @ c + c * params.alpha[None, :]
    return c * hadamard_div_guarded(b.T @ a, denominator, guard)


def multiplicative_step(
    a: DenseMatrix, factors: FactorPair, params: RegParams, guard: float = 0.0
) -> FactorPair:
    """Multiplicative B then C update; C uses the new B. Zero entries stay zero."""
    new_b = multiplicative_update_b(a, factors, params, guard)
    new_c = multiplicative_update_c(a, FactorPair(new_b, factors.c), params, guard)
    return FactorPair(new_b, new_c)


def zero_lock_escape(x: DenseMatrix, grad: DenseMatrix, sigma: float) -> DenseMatrix:
    """``max(x, sigma)`` where the gradient is negative, ``x`` elsewhere."""
    if x.shape != grad.shape:
        raise ShapeMismatchError("zero_lock_escape", x.shape, grad.shape)
    if not sigma > 0:
        raise InvalidParameterError("sigma must be > 0")
    return np.where(grad < 0, np.maximum(x, sigma), x)


def additive_step_b(
    a: DenseMatrix, factors: FactorPair, params: RegParams, config: SolverConfig
) -> DenseMatrix:
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c, params)
    cct = c @ c.T
    gradient = b @ cct - a @ c.T + params.beta[:, None] * b
    b_bar = zero_lock_escape(b, gradient, config.sigma)
    denominator = b_bar @ cct + params.beta[:, None] * b_bar
    step = hadamard_div_guarded(b_bar * gradient, denominator, config.delta_b)
    # rounding can leave an entry a few ulps below zero
    return np.maximum(b - step, 0.0)


def additive_step_c(
    a: DenseMatrix, factors: FactorPair, params: RegParams, config: SolverConfig
) -> DenseMatrix:
    """Mirror of :func:`additive_step_b`; ``factors.b`` should already be the new B."""
    b, c = factors.b, factors.c
    check_factor_shapes(a, b, c, params)
    btb = b.T @ b
    gradient = btb @ c - b.T @ a + c * params.alpha[None, :]
    c_bar = zero_lock_escape(c, gradient, config.sigma)
    denominator = btb @ c_bar + c_bar * params.alpha[None, :]
    step = hadamard_div_guarded(c_bar * gradient, denominator, config.delta_c)
    return np.maximum(c - step, 0.0)


def kkt_residual(a: DenseMatrix, factors: FactorPair, params: RegParams) -> KktResidual:
    b, c = factors.b, factors.c
    gb = grad_b(a, b, c, params)
    gc = grad_c(a, b, c, params)
    return KktResidual(
        max_slack_b=float(np.max(np.abs(complementary_slackness(gb, b)))),
        max_slack_c=float(np.max(np.abs(complementary_slackness(gc, c)))),
        neg_grad_at_zero_b=int(np.count_nonzero((b == 0) & (gb < 0))),
        neg_grad_at_zero_c=int(np.count_nonzero((c == 0) & (gc < 0))),
    )


def init_factors(
    m: int,
    n: int,
    r: int,
    seed: int | np.random.Generator | None = None,
    strategy: Literal["uniform_random", "provided"] = "uniform_random",
    *,
    b: npt.ArrayLike | None = None,
    c: npt.ArrayLike | None = None,
) -> FactorPair:
    """Initial factors: i.i.d. uniform on (0, 1), or validated caller matrices."""
    if m < 1 or n < 1 or r < 1:
        raise InvalidParameterError("dimensions must be positive")
    if strategy == "uniform_random":
        rng = np.random.default_rng(seed)
        low = np.finfo(np.float64).tiny
        return FactorPair(rng.uniform(low, 1.0, size=(m, r)), rng.uniform(low, 1.0, size=(r, n)))
    if strategy == "provided":
        if b is None or c is None:
            raise InvalidParameterError("provided strategy needs both b and c")
        factors = FactorPair(b, c)
        if factors.b.shape != (m, r) or factors.c.shape != (r, n):
            raise ShapeMismatchError("init_factors", factors.b.shape, factors.c.shape, (m, r, n))
        return factors
    raise InvalidParameterError(f"unknown factor init strategy {strategy!r}")


def _check_finite(iteration: int, **arrays: np.ndarray) -> None:
    for name, values in arrays.items():
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(
                f"iteration {iteration}: {name} has non-finite entries",
                iteration=iteration,
                field=name,
            )


def factorize(
    a: npt.ArrayLike,
    config: SolverConfig,
    init: FactorPair | None = None,
    init_params: RegParams | None = None,
    *,
    callback: IterationCallback | None = None,
) -> FactorizationResult:
    """Run the regularized factorization loop until KKT convergence or ``max_iter``.

    ``callback(iteration, factors, params)`` is called after each completed
    iteration with the new factors and the updated weights.
    """
    a = as_matrix(a, name="A")
    if np.any(a < 0):
        raise NegativeEntryError("input matrix cannot contain negative entries")
    m, n = a.shape
    gamma_b, gamma_c = config.gamma_vectors(m, n)
    factors = init or init_factors(m, n, config.rank, config.seed)
    if factors.rank != config.rank:
        raise ShapeMismatchError("initial factors vs rank", factors.b.shape, (m, config.rank))
    params = init_params or init_regularization(m, n)
    check_factor_shapes(a, factors.b, factors.c, params)

    tr_ata = frobenius_norm_sq(a)
    initial_objective = objective_j(
        a, factors.b, factors.c, params, form=config.objective_form, tr_ata=tr_ata
    )
    initial_params = params
    logger.info(
        "factorize: %dx%d rank=%d variant=%s update_regularization=%s J0=%.6g",
        m, n, config.rank, config.variant, config.update_regularization, initial_objective,
    )

    traces: list[IterationTrace] = []
    trajectory = ParamTrajectory()
    termination = Termination.MAX_ITER
    for iteration in range(1, config.max_iter + 1):
        if config.variant == "additive":
            new_b = additive_step_b(a, factors, params, config)
            _check_finite(iteration, B=new_b)
            new_c = additive_step_c(a, FactorPair(new_b, factors.c), params, config)
        else:
            new_b = multiplicative_update_b(a, factors, params, config.delta_b)
            _check_finite(iteration, B=new_b)
            new_c = multiplicative_update_c(
                a, FactorPair(new_b, factors.c), params, config.delta_c
            )
        _check_finite(iteration, C=new_c)
        updated = FactorPair(new_b, new_c)

        if config.update_regularization:
            new_params = RegParams(
                update_beta(a, FactorPair(new_b, factors.c), gamma_b, config.delta_b),
                update_alpha(a, updated, gamma_c, config.delta_c),
            )
        else:
            new_params = params

        trace = record_iteration(
            iteration, a, updated.b, updated.c, params, new_params,
            form=config.objective_form, tr_ata=tr_ata,
        )
        traces.append(trace)
        trajectory.append(new_params)
        factors, params = updated, new_params
        if callback is not None:
            callback(iteration, factors, params)

        logger.debug(
            "iteration %d: J=%.17g slack_b=%.3e slack_c=%.3e",
            iteration, trace.objective_combined, trace.max_slack_b, trace.max_slack_c,
        )
        if trace.max_slack_b <= config.tol and trace.max_slack_c <= config.tol:
            termination = Termination.KKT_CONVERGED
            break

    if termination is Termination.MAX_ITER:
        logger.info(
            "factorize: max_iter=%d reached, slack_b=%.3e slack_c=%.3e",
            config.max_iter, traces[-1].max_slack_b, traces[-1].max_slack_c,
        )
    else:
        logger.info("factorize: KKT converged after %d iterations", len(traces))

    return FactorizationResult(
        factors=factors,
        params=params,
        traces=traces,
        termination=termination,
        trajectory=trajectory,
        initial_objective=initial_objective,
        initial_params=initial_params,
    )
