"""Dense-matrix kernels shared by every solver.

Matrices are 2-D ``float64`` ndarrays. Regularization weights are stored as
vectors: the diagonal products ``diag(beta) @ B`` and ``C @ diag(alpha)`` are
realized as row scaling of ``B`` and column scaling of ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from .errors import InvalidParameterError, NegativeEntryError, NonFiniteError, ShapeMismatchError

DenseMatrix = npt.NDArray[np.float64]
ObjectiveForm = Literal["direct", "trace"]


def as_matrix(values: npt.ArrayLike, *, name: str = "matrix") -> DenseMatrix:
    """Validate *values* as a finite 2-D matrix and return a read-only copy."""
    out = np.array(values, dtype=np.float64, copy=True)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise ShapeMismatchError(f"{name} must be a non-empty 2-D matrix", out.shape)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries", field=name)
    out.setflags(write=False)
    return out


def as_vector(values: npt.ArrayLike, *, name: str = "vector") -> npt.NDArray[np.float64]:
    out = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries", field=name)
    out.setflags(write=False)
    return out


@dataclass(slots=True)
class RegParams:
    """Per-row ``beta`` (weights on B) and per-column ``alpha`` (weights on C)."""

    beta: npt.NDArray[np.float64]
    alpha: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        self.beta = as_vector(self.beta, name="beta")
        self.alpha = as_vector(self.alpha, name="alpha")
        if np.any(self.beta < 0) or np.any(self.alpha < 0):
            raise NegativeEntryError("regularization weights must be nonnegative")

    @classmethod
    def zeros(cls, m: int, n: int) -> RegParams:
        return cls(np.zeros(m), np.zeros(n))

    def check_shape(self, m: int, n: int) -> None:
        if self.beta.shape != (m,) or self.alpha.shape != (n,):
            raise ShapeMismatchError("RegParams", self.beta.shape, self.alpha.shape, (m, n))


def frobenius_norm_sq(m: DenseMatrix) -> float:
    """Sum of squared entries."""
    return float(np.einsum("ij,ij->", m, m))


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    return a @ b


def transpose(m: DenseMatrix) -> DenseMatrix:
    return np.ascontiguousarray(m.T)


def hadamard_mul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.shape != b.shape:
        raise ShapeMismatchError("hadamard_mul", a.shape, b.shape)
    return a * b


def hadamard_div_guarded(a: DenseMatrix, b: DenseMatrix, guard: float) -> DenseMatrix:
    """Entrywise ``a / (b + guard)``."""
    if a.shape != b.shape:
        raise ShapeMismatchError("hadamard_div_guarded", a.shape, b.shape)
    if guard < 0:
        raise InvalidParameterError("guard must be >= 0")
    return a / (b + guard)


def complementary_slackness(grad: DenseMatrix, x: DenseMatrix) -> DenseMatrix:
    """``grad ⊙ x``; vanishes entrywise at a KKT point."""
    return hadamard_mul(grad, x)


def check_factor_shapes(
    a: DenseMatrix, b: DenseMatrix, c: DenseMatrix, params: RegParams | None = None
) -> None:
    m, n = a.shape
    if b.ndim != 2 or c.ndim != 2 or b.shape[0] != m or c.shape[1] != n or b.shape[1] != c.shape[0]:
        raise ShapeMismatchError("A ~ BC", a.shape, b.shape, c.shape)
    if params is not None:
        params.check_shape(m, n)


def penalty_terms(b: DenseMatrix, c: DenseMatrix, params: RegParams) -> float:
    """``||sqrt(beta) B||_F^2 + ||C sqrt(alpha)||_F^2``."""
    row_norms = np.einsum("ij,ij->i", b, b)
    col_norms = np.einsum("ij,ij->j", c, c)
    return float(params.beta @ row_norms + params.alpha @ col_norms)


def objective_j(
    a: DenseMatrix,
    b: DenseMatrix,
    c: DenseMatrix,
    params: RegParams,
    *,
    form: ObjectiveForm = "direct",
    tr_ata: float | None = None,
) -> float:
    """Tikhonov-regularized NMF objective.

    ``0.5*||A - BC||_F^2 + 0.5*||sqrt(beta) B||_F^2 + 0.5*||C sqrt(alpha)||_F^2``

    ``form="trace"`` expands the residual term as
    ``0.5*tr(A'A) - tr(C'(B'A)) + 0.5*tr(C'(B'B)C)`` which never forms the
    M x N residual; pass a precomputed ``tr_ata`` to reuse it across calls.
    """
    check_factor_shapes(a, b, c, params)
    penalty = penalty_terms(b, c, params)
    if form == "direct":
        residual = a - b @ c
        return 0.5 * (frobenius_norm_sq(residual) + penalty)
    if form == "trace":
        if tr_ata is None:
            tr_ata = frobenius_norm_sq(a)
        cross = float(np.einsum("ij,ij->", c, b.T @ a))
        fit = float(np.einsum("ij,ij->", c, (b.T @ b) @ c))
        # cancellation can leave a tiny negative value at an exact fit
        return max(0.0, 0.5 * tr_ata - cross + 0.5 * fit + 0.5 * penalty)
    raise InvalidParameterError(f"unknown objective form {form!r}")


def grad_b(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix, params: RegParams) -> DenseMatrix:
    """``B C C' - A C' + beta B``."""
    check_factor_shapes(a, b, c, params)
    return b @ (c @ c.T) - a @ c.T + params.beta[:, None] * b


def grad_c(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix, params: RegParams) -> DenseMatrix:
    """``B'B C - B'A + C alpha``."""
    check_factor_shapes(a, b, c, params)
    return (b.T @ b) @ c - b.T @ a + c * params.alpha[None, :]
