"""High-level factorization API.

Usage::

    from tikhonov_nmf import TikhonovNMF

    model = TikhonovNMF(rank=5, seed=42)
    result = model.fit(a)
    b, c = result.factors.b, result.factors.c
"""

from __future__ import annotations

import numpy.typing as npt

from .config import (
    DEFAULT_DELTA,
    DEFAULT_GAMMA,
    DEFAULT_MAX_ITER,
    DEFAULT_SIGMA,
    DEFAULT_TOL,
    GammaSpec,
    SolverConfig,
    Variant,
)
from .matrix_core import ObjectiveForm, RegParams, as_matrix
from .nmf_engine import (
    FactorizationResult,
    FactorPair,
    IterationCallback,
    KktResidual,
    factorize,
    kkt_residual,
)
from .regularizer import fixed_point_residual


class TikhonovNMF:
    """Nonnegative factorization ``A ~ BC`` with automatically tuned Tikhonov weights.

    Parameters
    ----------
    rank : int
        Inner dimension R of the factorization.
    variant : str
        ``"additive"`` (converging updates with zero-lock escape) or
        ``"multiplicative"`` (baseline rule, entries at zero stay there).
    sigma : float
        Floor that lifts zero entries with a negative gradient.
    delta_b, delta_c : float
        Denominator guards of the B and C steps and of the weight updates.
    tol : float
        KKT stopping tolerance on ``max |grad ⊙ X|``.
    max_iter : int
        Iteration budget.
    gamma_b, gamma_c : float or array-like
        L-corner slopes, scalar (broadcast) or one per row / column.
    update_regularization : bool
        When False the initial weights are kept for the whole run.
    seed : int | None
        Seed for the uniform random initial factors.
    objective_form : str
        ``"direct"`` or ``"trace"`` evaluation of the objective in traces.
    """

    def __init__(
        self,
        *,
        rank: int,
        variant: Variant = "additive",
        sigma: float = DEFAULT_SIGMA,
        delta_b: float = DEFAULT_DELTA,
        delta_c: float = DEFAULT_DELTA,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        gamma_b: GammaSpec = DEFAULT_GAMMA,
        gamma_c: GammaSpec = DEFAULT_GAMMA,
        update_regularization: bool = True,
        seed: int | None = None,
        objective_form: ObjectiveForm = "direct",
    ):
        self.cfg = SolverConfig(
            rank=rank,
            sigma=sigma,
            delta_b=delta_b,
            delta_c=delta_c,
            tol=tol,
            max_iter=max_iter,
            variant=variant,
            update_regularization=update_regularization,
            gamma_b=gamma_b,
            gamma_c=gamma_c,
            seed=seed,
            objective_form=objective_form,
        )

    def fit(
        self,
        a: npt.ArrayLike,
        *,
        init: FactorPair | None = None,
        init_params: RegParams | None = None,
        callback: IterationCallback | None = None,
    ) -> FactorizationResult:
        """Factorize *a*; random factors and zero weights unless given."""
        return factorize(a, self.cfg, init, init_params, callback=callback)

    @staticmethod
    def check(a: npt.ArrayLike, factors: FactorPair, params: RegParams | None = None) -> KktResidual:
        """KKT residual of *factors* for *a*; weights default to zero."""
        a = as_matrix(a, name="A")
        if params is None:
            params = RegParams.zeros(*a.shape)
        return kkt_residual(a, factors, params)

    def corner_gaps(self, a: npt.ArrayLike, result: FactorizationResult):
        """Per-index distance of the final weights from their L-corner condition."""
        a = as_matrix(a, name="A")
        gamma_b, gamma_c = self.cfg.gamma_vectors(*a.shape)
        return fixed_point_residual(
            a,
            result.factors,
            result.params,
            gamma_b,
            gamma_c,
            self.cfg.delta_b,
            self.cfg.delta_c,
        )
