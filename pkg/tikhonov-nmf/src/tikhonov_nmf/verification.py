"""Brute-force reference computations for tests and acceptance checks.

Nothing here calls into :mod:`tikhonov_nmf.matrix_core` kernels or the
solvers it checks: objectives and updates are recomputed with explicit Python
loops, and regularized solves use a stacked least-squares system instead of
the normal equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import InsufficientDataError, InvalidParameterError, ShapeMismatchError

Matrix = npt.NDArray[np.float64]


@dataclass(slots=True)
class OracleReport:
    case: str
    computed: npt.NDArray[np.float64]
    reference: npt.NDArray[np.float64]
    max_relative_error: float

    def within(self, tolerance: float) -> bool:
        return self.max_relative_error <= tolerance


def relative_error(computed: npt.ArrayLike, reference: npt.ArrayLike) -> float:
    """Max of ``|computed - reference| / (1 + |reference|)``."""
    got = np.asarray(computed, dtype=np.float64)
    want = np.asarray(reference, dtype=np.float64)
    if got.shape != want.shape:
        raise ShapeMismatchError("relative_error", got.shape, want.shape)
    if got.size == 0:
        return 0.0
    return float(np.max(np.abs(got - want) / (1.0 + np.abs(want))))


def compare(case: str, computed: npt.ArrayLike, reference: npt.ArrayLike) -> OracleReport:
    got = np.atleast_1d(np.asarray(computed, dtype=np.float64))
    want = np.atleast_1d(np.asarray(reference, dtype=np.float64))
    return OracleReport(case, got, want, relative_error(got, want))


def _dims(a: Matrix, b: Matrix, c: Matrix) -> tuple[int, int, int]:
    m, n = len(a), len(a[0])
    r = len(c)
    if len(b) != m or any(len(row) != r for row in b) or any(len(row) != n for row in c):
        raise ShapeMismatchError("oracle A ~ BC", np.shape(a), np.shape(b), np.shape(c))
    return m, n, r


def _product_entry(b: Matrix, c: Matrix, i: int, j: int, r: int) -> float:
    return math.fsum(float(b[i][k]) * float(c[k][j]) for k in range(r))


def naive_objective(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    c: npt.ArrayLike,
    beta: npt.ArrayLike,
    alpha: npt.ArrayLike,
) -> float:
    """Objective recomputed term by term with triple loops and exact summation."""
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    m, n, r = _dims(a, b, c)
    beta, alpha = list(np.ravel(beta)), list(np.ravel(alpha))
    if len(beta) != m or len(alpha) != n:
        raise ShapeMismatchError("oracle weights", (len(beta),), (len(alpha),), (m, n))
    terms = []
    for i in range(m):
        for j in range(n):
            diff = float(a[i][j]) - _product_entry(b, c, i, j, r)
            terms.append(diff * diff)
    for i in range(m):
        for k in range(r):
            terms.append(float(beta[i]) * float(b[i][k]) ** 2)
    for k in range(r):
        for j in range(n):
            terms.append(float(alpha[j]) * float(c[k][j]) ** 2)
    return 0.5 * math.fsum(terms)


def naive_gradients(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    c: npt.ArrayLike,
    beta: npt.ArrayLike,
    alpha: npt.ArrayLike,
) -> tuple[Matrix, Matrix]:
    """Analytic gradients by scalar loops: ``(BC - A)C' + beta B`` and ``B'(BC - A) + C alpha``."""
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    m, n, r = _dims(a, b, c)
    beta, alpha = np.ravel(beta), np.ravel(alpha)
    resid = [[_product_entry(b, c, i, j, r) - float(a[i][j]) for j in range(n)] for i in range(m)]
    gb = np.zeros((m, r))
    gc = np.zeros((r, n))
    for i in range(m):
        for k in range(r):
            gb[i][k] = math.fsum(resid[i][j] * float(c[k][j]) for j in range(n)) + beta[i] * b[i][k]
    for k in range(r):
        for j in range(n):
            gc[k][j] = math.fsum(float(b[i][k]) * resid[i][j] for i in range(m)) + alpha[j] * c[k][j]
    return gb, gc


def finite_diff_gradient(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    c: npt.ArrayLike,
    beta: npt.ArrayLike,
    alpha: npt.ArrayLike,
    step: float = 1e-6,
) -> tuple[Matrix, Matrix]:
    """Central differences of :func:`naive_objective`, entry by entry."""
    if not step > 0:
        raise InvalidParameterError("finite difference step must be > 0")
    b = np.array(b, dtype=np.float64)
    c = np.array(c, dtype=np.float64)

    def central(x: Matrix, evaluate) -> Matrix:
        out = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            saved = x[idx]
            x[idx] = saved + step
            upper = evaluate()
            x[idx] = saved - step
            lower = evaluate()
            x[idx] = saved
            out[idx] = (upper - lower) / (2.0 * step)
        return out

    def objective() -> float:
        return naive_objective(a, b, c, beta, alpha)

    return central(b, objective), central(c, objective)


def naive_multiplicative_step(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    c: npt.ArrayLike,
    beta: npt.ArrayLike,
    alpha: npt.ArrayLike,
    guard: float = 0.0,
) -> tuple[Matrix, Matrix]:
    """Scalar-loop multiplicative B then C update (C sees the new B)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    c = np.array(c, dtype=np.float64)
    m, n, r = _dims(a, b, c)
    beta, alpha = np.ravel(beta), np.ravel(alpha)
    new_b = np.zeros_like(b)
    for i in range(m):
        for k in range(r):
            num = math.fsum(float(a[i][j]) * float(c[k][j]) for j in range(n))
            bcct = math.fsum(
                _product_entry(b, c, i, j, r) * float(c[k][j]) for j in range(n)
            )
            new_b[i][k] = b[i][k] * num / (bcct + beta[i] * b[i][k] + guard)
    new_c = np.zeros_like(c)
    for k in range(r):
        for j in range(n):
            num = math.fsum(float(new_b[i][k]) * float(a[i][j]) for i in range(m))
            btbc = math.fsum(
                float(new_b[i][k]) * _product_entry(new_b, c, i, j, r) for i in range(m)
            )
            new_c[k][j] = c[k][j] * num / (btbc + c[k][j] * alpha[j] + guard)
    return new_b, new_c


def naive_update_beta(
    a: npt.ArrayLike, b: npt.ArrayLike, c: npt.ArrayLike, gamma_b: npt.ArrayLike, delta_b: float
) -> npt.NDArray[np.float64]:
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    m, n, r = _dims(a, b, c)
    gamma_b = np.ravel(gamma_b)
    out = np.zeros(m)
    for i in range(m):
        resid = math.fsum((float(a[i][j]) - _product_entry(b, c, i, j, r)) ** 2 for j in range(n))
        norm = math.fsum(float(b[i][k]) ** 2 for k in range(r))
        out[i] = abs(gamma_b[i]) * resid / (norm + delta_b)
    return out


def naive_update_alpha(
    a: npt.ArrayLike, b: npt.ArrayLike, c: npt.ArrayLike, gamma_c: npt.ArrayLike, delta_c: float
) -> npt.NDArray[np.float64]:
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    m, n, r = _dims(a, b, c)
    gamma_c = np.ravel(gamma_c)
    out = np.zeros(n)
    for j in range(n):
        resid = math.fsum((float(a[i][j]) - _product_entry(b, c, i, j, r)) ** 2 for i in range(m))
        norm = math.fsum(float(c[k][j]) ** 2 for k in range(r))
        out[j] = abs(gamma_c[j]) * resid / (norm + delta_c)
    return out


def naive_slackness(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    c: npt.ArrayLike,
    beta: npt.ArrayLike,
    alpha: npt.ArrayLike,
) -> tuple[Matrix, Matrix]:
    """Entrywise ``grad ⊙ X`` for both factors."""
    gb, gc = naive_gradients(a, b, c, beta, alpha)
    return gb * np.asarray(b, dtype=np.float64), gc * np.asarray(c, dtype=np.float64)


@dataclass(slots=True)
class FixedPointScan:
    """Grid brackets ``(lo, hi)`` where ``g(lam) - lam`` changes sign.

    ``zero_is_fixed_point`` reports the ``lam = 0`` endpoint separately,
    since the grid itself is strictly positive.
    """

    brackets: list[tuple[float, float]] = field(default_factory=list)
    zero_is_fixed_point: bool = False

    def contains(self, lam: float, slack: float = 0.0) -> bool:
        return any(lo - slack <= lam <= hi + slack for lo, hi in self.brackets)


def _stacked_solve(design: Matrix, observation: npt.NDArray[np.float64], lam: float):
    # min ||[A; sqrt(lam) I] x - [y; 0]||^2 has the same minimizer as the
    # Tikhonov problem
    m = design.shape[1]
    stacked = np.vstack([design, math.sqrt(lam) * np.eye(m)])
    rhs = np.concatenate([observation, np.zeros(m)])
    x, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    residual = observation - design @ x
    return float(residual @ residual), float(x @ x)


def scan_lambda_fixed_points(
    design: npt.ArrayLike,
    observation: npt.ArrayLike,
    gamma: float,
    grid: npt.ArrayLike,
) -> FixedPointScan:
    """Sign changes of ``g(lam) - lam`` with ``g(lam) = |gamma| rho^2(lam) / eta^2(lam)``."""
    design = np.asarray(design, dtype=np.float64)
    observation = np.ravel(np.asarray(observation, dtype=np.float64))
    lams = np.ravel(np.asarray(grid, dtype=np.float64))
    if lams.size < 2:
        raise InsufficientDataError("fixed-point scan needs at least 2 grid points")
    if np.any(lams <= 0) or np.any(np.diff(lams) <= 0):
        raise InvalidParameterError("grid must be strictly positive and ascending")

    def g(lam: float) -> float:
        rho_sq, eta_sq = _stacked_solve(design, observation, lam)
        return abs(gamma) * rho_sq / eta_sq if eta_sq > 0 else math.inf

    h = np.array([g(lam) - lam for lam in lams])
    scan = FixedPointScan()
    for i in range(lams.size):
        if h[i] == 0:
            scan.brackets.append((float(lams[i]), float(lams[i])))
        elif i + 1 < lams.size and h[i] * h[i + 1] < 0:
            scan.brackets.append((float(lams[i]), float(lams[i + 1])))
    scan.zero_is_fixed_point = g(0.0) <= 1e-14
    return scan
