"""Solver configuration and process settings loaded from environment variables."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from .errors import InvalidParameterError, ShapeMismatchError
from .matrix_core import ObjectiveForm

# Reference operating values of the converged additive-update algorithm.
DEFAULT_SIGMA = 1.0e-9
DEFAULT_DELTA = DEFAULT_SIGMA
DEFAULT_TOL = 1.0e-9
DEFAULT_MAX_ITER = 1000
DEFAULT_GAMMA = 0.1  # small values lead to better convergence

# Scalar Tikhonov lambda iteration.
DEFAULT_LAMBDA_GAMMA = 1.0
DEFAULT_LAMBDA0 = 0.0
DEFAULT_LAMBDA_EPS = 1.0e-3
DEFAULT_DIVERGENCE_LIMIT = 1.0e12

Variant = Literal["additive", "multiplicative"]

GammaSpec = npt.ArrayLike


@dataclass(slots=True)
class SolverConfig:
    """Scalar knobs of the regularized factorization loop."""

    rank: int
    sigma: float = DEFAULT_SIGMA
    delta_b: float = DEFAULT_DELTA
    delta_c: float = DEFAULT_DELTA
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    variant: Variant = "additive"
    update_regularization: bool = True
    gamma_b: GammaSpec = DEFAULT_GAMMA
    gamma_c: GammaSpec = DEFAULT_GAMMA
    seed: int | None = None
    objective_form: ObjectiveForm = "direct"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if int(self.rank) < 1:
            raise InvalidParameterError("rank must be >= 1")
        if not self.sigma > 0:
            raise InvalidParameterError("sigma must be > 0")
        if self.delta_b < 0 or self.delta_c < 0:
            raise InvalidParameterError("delta_b and delta_c must be >= 0")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be > 0")
        if int(self.max_iter) < 1:
            raise InvalidParameterError("max_iter must be >= 1")
        if self.variant not in {"additive", "multiplicative"}:
            raise InvalidParameterError("variant must be either 'additive' or 'multiplicative'")
        if self.objective_form not in {"direct", "trace"}:
            raise InvalidParameterError("objective_form must be either 'direct' or 'trace'")
        for name in ("gamma_b", "gamma_c"):
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if values.ndim > 1 or not np.all(np.isfinite(values)):
                raise InvalidParameterError(f"{name} must be a finite scalar or vector")
            # the update rules only ever use |gamma|
            setattr(self, name, np.abs(values) if values.ndim else float(abs(values)))

    def gamma_vectors(self, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(|gamma_b|, |gamma_c|)`` broadcast to lengths ``m`` and ``n``."""
        return _broadcast_gamma("gamma_b", self.gamma_b, m), _broadcast_gamma(
            "gamma_c", self.gamma_c, n
        )


def _broadcast_gamma(name: str, gamma: GammaSpec, length: int) -> np.ndarray:
    values = np.asarray(gamma, dtype=np.float64)
    if values.ndim == 0:
        return np.full(length, float(values))
    if values.shape != (length,):
        raise ShapeMismatchError(name, values.shape, (length,))
    return values.copy()


@dataclass(slots=True)
class LambdaConfig:
    """Knobs of the scalar Tikhonov lambda iteration."""

    gamma: float = DEFAULT_LAMBDA_GAMMA
    lambda0: float = DEFAULT_LAMBDA0
    eps: float = DEFAULT_LAMBDA_EPS
    max_iter: int = DEFAULT_MAX_ITER
    divergence_limit: float = DEFAULT_DIVERGENCE_LIMIT

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not np.isfinite(self.gamma):
            raise InvalidParameterError("gamma must be finite")
        if self.lambda0 < 0 or not np.isfinite(self.lambda0):
            raise InvalidParameterError("lambda0 must be a finite value >= 0")
        if not self.eps > 0:
            raise InvalidParameterError("eps must be > 0")
        if int(self.max_iter) < 1:
            raise InvalidParameterError("max_iter must be >= 1")
        if not self.divergence_limit > 0:
            raise InvalidParameterError("divergence_limit must be > 0")


@dataclass(slots=True)
class Settings:
    log_level: str
    default_seed: int | None
    workers: int

    def validate(self) -> None:
        if logging.getLevelName(self.log_level) == f"Level {self.log_level}":
            raise ValueError("TIKHONOV_NMF_LOG_LEVEL must be a logging level name")
        if self.workers < 1:
            raise ValueError("TIKHONOV_NMF_WORKERS must be >= 1")


def _int_env(name: str, default: str) -> int | None:
    raw = os.getenv(name, default).strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None


def load_settings() -> Settings:
    workers = _int_env("TIKHONOV_NMF_WORKERS", "1")
    settings = Settings(
        log_level=os.getenv("TIKHONOV_NMF_LOG_LEVEL", "WARNING").strip().upper() or "WARNING",
        default_seed=_int_env("TIKHONOV_NMF_SEED", ""),
        workers=1 if workers is None else workers,
    )
    settings.validate()
    return settings
