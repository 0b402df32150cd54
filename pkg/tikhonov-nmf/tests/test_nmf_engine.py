"""Tests for the factorization steps and the factorize loop."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from tikhonov_nmf.config import SolverConfig
from tikhonov_nmf.errors import (
    InvalidParameterError,
    NegativeEntryError,
    NonFiniteError,
    ShapeMismatchError,
)
from tikhonov_nmf.matrix_core import RegParams, objective_j
from tikhonov_nmf.nmf_engine import (
    FactorPair,
    Termination,
    additive_step_b,
    additive_step_c,
    factorize,
    init_factors,
    kkt_residual,
    multiplicative_step,
    zero_lock_escape,
)
from tikhonov_nmf.verification import naive_multiplicative_step, naive_slackness, relative_error


def _exact_product(rng, m=20, n=15, r=5):
    b0 = rng.uniform(0.1, 1.0, size=(m, r))
    c0 = rng.uniform(0.1, 1.0, size=(r, n))
    return b0 @ c0, FactorPair(b0, c0)


def _zero_lock_instance():
    # b[0, 0] = 0 while A C' is large there, so the B gradient is negative
    a = np.full((3, 3), 3.0)
    b = np.array([[0.0, 0.1], [0.5, 0.5], [0.5, 0.5]])
    c = np.full((2, 3), 0.5)
    return a, FactorPair(b, c)


# ======================================================================
# FactorPair / init_factors
# ======================================================================

class TestFactorPair:
    def test_rank_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            FactorPair(np.ones((3, 2)), np.ones((3, 4)))

    def test_negative_entry(self):
        with pytest.raises(NegativeEntryError):
            FactorPair(np.array([[1.0, -0.5]]), np.ones((2, 2)))

    def test_rank_property(self):
        assert FactorPair(np.ones((3, 2)), np.ones((2, 4))).rank == 2


class TestInitFactors:
    def test_seeded_is_deterministic(self):
        first = init_factors(10, 8, 3, seed=7)
        second = init_factors(10, 8, 3, seed=7)
        assert_array_equal(first.b, second.b)
        assert_array_equal(first.c, second.c)

    def test_uniform_range(self):
        factors = init_factors(10, 6, 3, seed=1)
        assert factors.b.shape == (10, 3) and factors.c.shape == (3, 6)
        for x in (factors.b, factors.c):
            assert np.all(x > 0) and np.all(x < 1)

    def test_provided_validated(self):
        with pytest.raises(NegativeEntryError):
            init_factors(2, 2, 1, strategy="provided", b=[[1.0], [-1.0]], c=[[1.0, 1.0]])
        with pytest.raises(ShapeMismatchError):
            init_factors(3, 2, 1, strategy="provided", b=[[1.0], [1.0]], c=[[1.0, 1.0]])
        with pytest.raises(InvalidParameterError):
            init_factors(2, 2, 1, strategy="provided", b=[[1.0], [1.0]])

    def test_unknown_strategy(self):
        with pytest.raises(InvalidParameterError):
            init_factors(2, 2, 1, strategy="nndsvd")


# ======================================================================
# multiplicative step
# ======================================================================

class TestMultiplicativeStep:
    def test_exact_fit_is_fixed(self, rng):
        a, factors = _exact_product(rng, 6, 5, 2)
        out = multiplicative_step(a, factors, RegParams.zeros(6, 5), guard=0.0)
        assert_allclose(out.b, factors.b, rtol=1e-12)
        assert_allclose(out.c, factors.c, rtol=1e-12)

    def test_zero_entries_stay_zero(self):
        a, factors = _zero_lock_instance()
        out = multiplicative_step(a, factors, RegParams.zeros(3, 3), guard=1e-9)
        assert out.b[0, 0] == 0.0

    def test_matches_scalar_loop_oracle(self, rng):
        a = rng.uniform(size=(4, 4))
        factors = FactorPair(rng.uniform(size=(4, 2)), rng.uniform(size=(2, 4)))
        params = RegParams(np.full(4, 0.1), np.full(4, 0.1))
        out = multiplicative_step(a, factors, params, guard=0.0)
        ref_b, ref_c = naive_multiplicative_step(
            a, factors.b, factors.c, params.beta, params.alpha
        )
        assert relative_error(out.b, ref_b) <= 1e-12
        assert relative_error(out.c, ref_c) <= 1e-12


# ======================================================================
# zero-lock escape and additive steps
# ======================================================================

class TestZeroLockEscape:
    @pytest.mark.parametrize(
        "x, grad, expected",
        [(0.0, -1.0, 1e-9), (5.0, -1.0, 5.0), (0.0, 1.0, 0.0), (0.0, 0.0, 0.0)],
    )
    def test_branches(self, x, grad, expected):
        out = zero_lock_escape(np.array([[x]]), np.array([[grad]]), 1e-9)
        assert out[0, 0] == expected

    def test_sigma_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            zero_lock_escape(np.zeros((1, 1)), np.zeros((1, 1)), 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            zero_lock_escape(np.zeros((1, 2)), np.zeros((2, 1)), 1e-9)


class TestAdditiveSteps:
    def test_stationary_point_unchanged(self, rng):
        a, factors = _exact_product(rng, 5, 4, 2)
        cfg = SolverConfig(rank=2)
        params = RegParams.zeros(5, 4)
        assert_allclose(additive_step_b(a, factors, params, cfg), factors.b, rtol=1e-12)
        assert_allclose(additive_step_c(a, factors, params, cfg), factors.c, rtol=1e-12)

    def test_b_escapes_zero(self):
        a, factors = _zero_lock_instance()
        new_b = additive_step_b(a, factors, RegParams.zeros(3, 3), SolverConfig(rank=2))
        assert new_b[0, 0] > 0

    def test_c_escapes_zero(self):
        a = np.full((3, 3), 3.0)
        b = np.full((3, 2), 0.5)
        c = np.array([[0.0, 0.5, 0.5], [0.1, 0.5, 0.5]])
        new_c = additive_step_c(a, FactorPair(b, c), RegParams.zeros(3, 3), SolverConfig(rank=2))
        assert new_c[0, 0] > 0

    def test_output_nonnegative(self, rng):
        a = rng.uniform(size=(6, 5))
        sparse_b = rng.uniform(size=(6, 3)) * (rng.uniform(size=(6, 3)) > 0.4)
        factors = FactorPair(sparse_b, rng.uniform(size=(3, 5)))
        params = RegParams(rng.uniform(size=6), rng.uniform(size=5))
        cfg = SolverConfig(rank=3)
        assert np.all(additive_step_b(a, factors, params, cfg) >= 0)
        assert np.all(additive_step_c(a, factors, params, cfg) >= 0)

    def test_shape_mismatch(self, rng):
        a = rng.uniform(size=(4, 4))
        factors = FactorPair(np.ones((3, 2)), np.ones((2, 4)))
        with pytest.raises(ShapeMismatchError):
            additive_step_b(a, factors, RegParams.zeros(4, 4), SolverConfig(rank=2))


# ======================================================================
# KKT residual
# ======================================================================

class TestKktResidual:
    def test_stationary_point(self, rng):
        a, factors = _exact_product(rng, 5, 4, 2)
        kkt = kkt_residual(a, factors, RegParams.zeros(5, 4))
        assert kkt.max_slack_b <= 1e-13 and kkt.max_slack_c <= 1e-13
        assert kkt.neg_grad_at_zero_b == 0 and kkt.neg_grad_at_zero_c == 0
        assert kkt.converged(1e-9)

    def test_zero_locked_row_detected(self):
        a = np.ones((3, 3))
        b = np.array([[0.0, 0.0], [0.5, 0.5], [0.5, 0.5]])
        c = np.full((2, 3), 0.5)
        kkt = kkt_residual(a, FactorPair(b, c), RegParams.zeros(3, 3))
        assert kkt.neg_grad_at_zero_b == 2
        assert not kkt.is_stationary

    def test_matches_scalar_loop_oracle(self, rng):
        a = rng.uniform(size=(5, 4))
        factors = FactorPair(rng.uniform(size=(5, 2)), rng.uniform(size=(2, 4)))
        params = RegParams(rng.uniform(size=5), rng.uniform(size=4))
        kkt = kkt_residual(a, factors, params)
        slack_b, slack_c = naive_slackness(a, factors.b, factors.c, params.beta, params.alpha)
        assert relative_error(kkt.max_slack_b, np.max(np.abs(slack_b))) <= 1e-12
        assert relative_error(kkt.max_slack_c, np.max(np.abs(slack_c))) <= 1e-12


# ======================================================================
# factorize
# ======================================================================

class TestFactorize:
    def test_stationary_start_stops_at_iteration_one(self, rng):
        a, factors = _exact_product(rng)
        cfg = SolverConfig(rank=5, update_regularization=False)
        result = factorize(a, cfg, init=factors, init_params=RegParams.zeros(20, 15))
        assert result.termination is Termination.KKT_CONVERGED
        assert result.iterations == 1
        assert_allclose(result.factors.b, factors.b, rtol=1e-12)
        assert_allclose(result.factors.c, factors.c, rtol=1e-12)

    def test_frozen_objective_never_increases(self, rng):
        a, _ = _exact_product(rng)
        result = factorize(a, SolverConfig(rank=5, max_iter=300, seed=3))
        previous = result.initial_objective
        for trace in result.traces:
            assert trace.objective_frozen <= previous + 1e-12 * (1 + previous)
            previous = trace.objective_combined

    def test_frozen_objective_matches_recomputation(self, rng):
        a = rng.uniform(size=(8, 6))
        snapshots = []
        weights = [RegParams.zeros(8, 6)]

        def keep(iteration, factors, params):
            snapshots.append(factors)
            weights.append(params)

        result = factorize(a, SolverConfig(rank=3, max_iter=20, seed=5), callback=keep)
        for k, trace in enumerate(result.traces):
            recomputed = objective_j(a, snapshots[k].b, snapshots[k].c, weights[k])
            assert relative_error(trace.objective_frozen, recomputed) <= 1e-12

    def test_same_seed_same_traces(self, rng):
        a = rng.uniform(size=(10, 7))
        cfg = SolverConfig(rank=3, max_iter=50, seed=11)
        assert factorize(a, cfg).traces == factorize(a, cfg).traces

    def test_frozen_regularization_keeps_params(self, rng):
        a = rng.uniform(size=(6, 5))
        params = RegParams(np.full(6, 0.5), np.full(5, 0.25))
        cfg = SolverConfig(rank=2, max_iter=15, seed=2, update_regularization=False)
        result = factorize(a, cfg, init_params=params)
        for beta, alpha in zip(result.trajectory.betas, result.trajectory.alphas):
            assert_array_equal(beta, params.beta)
            assert_array_equal(alpha, params.alpha)

    def test_boundedness_with_frozen_params(self, rng):
        a = rng.uniform(size=(8, 6))
        params = RegParams(np.full(8, 0.5), np.full(6, 0.5))
        init = init_factors(8, 6, 3, seed=4)
        bound = objective_j(a, init.b, init.c, params)

        def check(iteration, factors, _params):
            assert np.all(np.isfinite(factors.b)) and np.all(np.isfinite(factors.c))
            assert np.all(0.5 * params.beta * np.sum(factors.b**2, axis=1) <= bound)
            assert np.all(0.5 * params.alpha * np.sum(factors.c**2, axis=0) <= bound)

        cfg = SolverConfig(rank=3, max_iter=200, update_regularization=False)
        factorize(a, cfg, init=init, init_params=params, callback=check)

    def test_multiplicative_variant_keeps_zero_locked(self):
        a, factors = _zero_lock_instance()
        cfg = SolverConfig(rank=2, max_iter=5, variant="multiplicative")
        result = factorize(a, cfg, init=factors)
        assert result.factors.b[0, 0] == 0.0

    def test_stationary_point_is_a_fixed_point(self, rng):
        a, factors = _exact_product(rng, 6, 5, 2)
        params = RegParams.zeros(6, 5)
        assert kkt_residual(a, factors, params).max_slack_b <= 1e-12
        cfg = SolverConfig(rank=2, max_iter=1, update_regularization=False)
        result = factorize(a, cfg, init=factors, init_params=params)
        assert np.max(np.abs(result.factors.b - factors.b)) <= 1e-12
        assert np.max(np.abs(result.factors.c - factors.c)) <= 1e-12

    def test_negative_input_rejected(self):
        with pytest.raises(NegativeEntryError, match="negative"):
            factorize(np.array([[1.0, -1.0], [0.5, 0.5]]), SolverConfig(rank=1))

    def test_rank_mismatch_with_init(self, rng):
        a, factors = _exact_product(rng, 6, 5, 2)
        with pytest.raises(ShapeMismatchError):
            factorize(a, SolverConfig(rank=3), init=factors)

    def test_non_finite_names_iteration(self):
        # delta = 0 with an all-zero column of C turns the B step into 0/0
        a = np.ones((2, 2))
        factors = FactorPair(np.zeros((2, 1)), np.zeros((1, 2)))
        cfg = SolverConfig(rank=1, delta_b=0.0, delta_c=0.0, max_iter=3)
        with pytest.raises(NonFiniteError) as excinfo:
            factorize(a, cfg, init=factors)
        assert excinfo.value.iteration == 1
        assert "iteration 1" in str(excinfo.value)

    def test_result_summary_properties(self, rng):
        a = rng.uniform(size=(6, 5))
        result = factorize(a, SolverConfig(rank=2, max_iter=10, seed=9))
        assert result.iterations == len(result.traces) == len(result.trajectory)
        assert result.residual_norm_sq == result.traces[-1].residual_norm_sq
        assert result.solution_norm_sq == (
            result.traces[-1].solution_norm_sq_b,
            result.traces[-1].solution_norm_sq_c,
        )
        assert result.objective_change >= 0
        assert result.termination is Termination.MAX_ITER and not result.converged
