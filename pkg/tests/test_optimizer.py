"""Objective, contribution scores, fixed-point update, and optimize() tests."""

import math

import numpy as np
import pytest

from promptweight import (
    DEFAULT_TAU,
    OptimizerConfig,
    SyntheticConfig,
    compute_logit_tensor,
    contribution_scores,
    fixed_point_step,
    generate_synthetic,
    grid_search_weights,
    objective,
    optimize,
    optimize_per_sample,
    zero_shot_predictions,
)
from helpers import finite_difference_gradient, random_instance

EPS = 1e-12


def oracle_objective(w, logits, anchor, lam_zs, lam_beta, tau):
    """From-scratch scalar-loop reimplementation of the objective."""
    n_s, n_t, n_c = logits.shape
    total = 0.0
    for i in range(n_s):
        bar = [
            sum(w[j] * logits[i, j, k] for j in range(n_t)) for k in range(n_c)
        ]
        m = max(bar)
        exps = [math.exp((b - m) / tau) for b in bar]
        z = sum(exps)
        p = [e / z for e in exps]
        h = -sum(pk * math.log(pk) for pk in p if pk > EPS)
        xh = -sum(
            p[k] * math.log(max(anchor[i, k], EPS)) for k in range(n_c)
        )
        total += h + lam_zs * xh
    barrier = -sum(x * math.log(x) for x in w if x > EPS)
    return total / n_s - lam_beta * barrier


def identical_template_instance(n_templates=3):
    ds = generate_synthetic(
        SyntheticConfig(
            num_samples=8,
            num_templates=n_templates,
            num_classes=4,
            dim=8,
            clean_template_count=n_templates,
            noise_sigma=0.0,
            seed=6,
        )
    )
    logits = compute_logit_tensor(ds)
    anchor = zero_shot_predictions(logits, 0, tau=0.5)
    return logits, anchor


class TestConfig:
    def test_mode_defaults(self):
        single = OptimizerConfig.for_single_sample()
        dataset = OptimizerConfig.for_dataset()
        assert single.lambda_zs == 100.0 and single.mode == "single_sample"
        assert dataset.lambda_zs == 0.1 and dataset.mode == "dataset"
        for cfg in (single, dataset):
            assert cfg.lambda_beta == 0.01
            assert abs(cfg.tau - 1.0 / 33.3) < 1e-15
            assert cfg.max_iters == 100 and cfg.tol == 1e-6

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"lambda_zs": -1.0},
            {"lambda_zs": 0.1, "lambda_beta": 0.0},
            {"lambda_zs": 0.1, "tau": 0.0},
            {"lambda_zs": 0.1, "max_iters": 0},
            {"lambda_zs": 0.1, "tol": 0.0},
            {"lambda_zs": 0.1, "mode": "bogus"},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            OptimizerConfig(**kwargs)


class TestObjective:
    def test_single_class_reduces_to_weight_barrier(self, rng):
        logits = rng.uniform(-1, 1, (4, 3, 1))
        anchor = np.ones((4, 1))
        cfg = OptimizerConfig(lambda_zs=5.0, lambda_beta=0.2, tau=0.5)
        w = rng.dirichlet(np.ones(3))
        expected = -cfg.lambda_beta * (-(w * np.log(w)).sum())
        assert abs(objective(w, logits, anchor, cfg) - expected) < 1e-12

    def test_identical_templates_constant_in_weights(self, rng):
        logits, anchor = identical_template_instance()
        cfg = OptimizerConfig(lambda_zs=0.0, lambda_beta=1e-12, tau=0.5)
        vals = [
            objective(rng.dirichlet(np.ones(3)), logits, anchor, cfg)
            for _ in range(5)
        ]
        np.testing.assert_allclose(vals, vals[0], atol=1e-9)

    def test_matches_independent_oracle(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.7, lambda_beta=0.13, tau=0.25)
        logits, anchor = random_instance(rng, 4, 3, 3, cfg.tau)
        for _ in range(5):
            w = rng.dirichlet(np.ones(3))
            got = objective(w, logits, anchor, cfg)
            want = oracle_objective(
                w, logits, anchor, cfg.lambda_zs, cfg.lambda_beta, cfg.tau
            )
            assert abs(got - want) < 1e-8


class TestContributionScores:
    def test_uniform_predictions_give_zero_scores(self, rng):
        # constant logits per (sample, template) make every prediction uniform
        base = rng.uniform(-1, 1, (5, 3))
        logits = np.repeat(base[:, :, None], 4, axis=2)
        anchor = np.full((5, 4), 0.25)
        cfg = OptimizerConfig(lambda_zs=0.0, lambda_beta=0.1, tau=0.5)
        scores = contribution_scores(np.full(3, 1 / 3), logits, anchor, cfg)
        np.testing.assert_allclose(scores, 0.0, atol=1e-12)

    def test_identical_templates_give_equal_scores(self):
        logits, anchor = identical_template_instance()
        cfg = OptimizerConfig(lambda_zs=0.3, lambda_beta=0.1, tau=0.5)
        scores = contribution_scores(np.full(3, 1 / 3), logits, anchor, cfg)
        assert np.ptp(scores) < 1e-13

    @pytest.mark.parametrize("lam_zs", [0.0, 0.1, 100.0])
    def test_scaled_scores_match_finite_difference_gradient(self, rng, lam_zs):
        """g_j = -S_j / (n_samples * tau) + lambda_beta * (1 + ln w_j)."""
        cfg = OptimizerConfig(lambda_zs=lam_zs, lambda_beta=0.15, tau=0.4)
        logits, anchor = random_instance(rng, 6, 4, 5, cfg.tau)
        w = rng.dirichlet(np.full(4, 5.0))
        scores = contribution_scores(w, logits, anchor, cfg)
        analytic = -scores / (6 * cfg.tau) + cfg.lambda_beta * (1.0 + np.log(w))
        fd = finite_difference_gradient(w, logits, anchor, cfg)
        np.testing.assert_allclose(analytic, fd, atol=2e-4 * (1 + np.abs(fd).max()))


class TestFixedPointStep:
    def test_zero_scores_give_uniform(self):
        for n in (2, 5, 9):
            np.testing.assert_allclose(
                fixed_point_step(np.zeros(n), 0.01), 1.0 / n, atol=1e-15
            )

    def test_shift_invariance(self, rng):
        scores = rng.normal(size=6)
        base = fixed_point_step(scores, 0.05)
        for c in (-3.0, 0.5, 7.0):
            shifted = fixed_point_step(scores + c, 0.05)
            np.testing.assert_allclose(shifted, base, atol=1e-12)

    def test_sharp_selection(self):
        w = fixed_point_step(np.array([1.0, 0.0]), 0.01)
        assert w[0] > 1.0 - 1e-40

    def test_output_on_simplex(self, rng):
        for _ in range(50):
            w = fixed_point_step(rng.normal(size=8) * 10, 0.3)
            assert w.min() >= 0.0
            assert abs(w.sum() - 1.0) < 1e-9

    def test_nonpositive_lambda_rejected(self):
        with pytest.raises(ValueError):
            fixed_point_step(np.zeros(3), 0.0)


class TestOptimize:
    def test_identical_templates_stay_uniform(self):
        logits, anchor = identical_template_instance()
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=0.01, tau=0.5)
        res = optimize(logits, anchor, cfg)
        assert res.converged
        assert res.iterations_used == 1
        np.testing.assert_allclose(res.weights, 1 / 3, atol=1e-12)

    def test_trace_length_matches_iterations(self, golden_logits, golden_anchor):
        res = optimize(golden_logits, golden_anchor, OptimizerConfig.for_dataset())
        assert res.objective_trace.size == res.iterations_used + 1

    def test_bit_for_bit_determinism(self, golden_logits, golden_anchor):
        cfg = OptimizerConfig.for_dataset()
        a = optimize(golden_logits, golden_anchor, cfg)
        b = optimize(golden_logits, golden_anchor, cfg)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.objective_trace, b.objective_trace)

    def test_permutation_equivariance(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=0.3, tau=0.5, tol=1e-10, max_iters=500)
        logits, anchor = random_instance(rng, 6, 5, 4, cfg.tau)
        perm = np.array([3, 0, 4, 1, 2])
        base = optimize(logits, anchor, cfg)
        permuted = optimize(logits[:, perm, :], anchor, cfg)
        assert base.converged and permuted.converged
        np.testing.assert_allclose(permuted.weights, base.weights[perm], atol=1e-9)

    def test_huge_barrier_forces_uniform(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=1e6, tau=DEFAULT_TAU)
        logits, anchor = random_instance(rng, 8, 6, 5, cfg.tau)
        res = optimize(logits, anchor, cfg)
        assert res.converged
        np.testing.assert_allclose(res.weights, 1.0 / 6, atol=1e-4)

    def test_single_sample_mode_requires_one_sample(self, rng):
        cfg = OptimizerConfig.for_single_sample()
        logits, anchor = random_instance(rng, 3, 4, 5, cfg.tau)
        with pytest.raises(ValueError, match="single_sample"):
            optimize(logits, anchor, cfg)
        res = optimize(logits[:1], anchor[:1], cfg)
        assert res.weights.shape == (4,)

    def test_init_weights_validated(self, rng):
        cfg = OptimizerConfig.for_dataset()
        logits, anchor = random_instance(rng, 3, 4, 5, cfg.tau)
        with pytest.raises(ValueError):
            optimize(logits, anchor, cfg, init_weights=[0.5, 0.5, 0.5, 0.5])
        with pytest.raises(ValueError):
            optimize(logits, anchor, cfg, init_weights=[1.5, -0.5, 0.0, 0.0])

    def test_anchor_shape_validated(self, rng):
        cfg = OptimizerConfig.for_dataset()
        logits, anchor = random_instance(rng, 3, 4, 5, cfg.tau)
        with pytest.raises(ValueError):
            optimize(logits, anchor[:2], cfg)

    def test_grid_agreement_smoke(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=0.3, tau=0.5, tol=1e-10, max_iters=500)
        logits, anchor = random_instance(rng, 5, 2, 4, cfg.tau)
        res = optimize(logits, anchor, cfg)
        grid = grid_search_weights(logits, anchor, cfg, 1e-3)
        assert res.converged
        assert np.abs(res.weights - grid).sum() < 5e-3


class TestOptimizePerSample:
    def test_matches_manual_slicing(self, rng):
        cfg = OptimizerConfig.for_single_sample(max_iters=30)
        logits, anchor = random_instance(rng, 4, 3, 4, cfg.tau)
        res = optimize_per_sample(logits, anchor, cfg)
        assert res.weights.shape == (4, 3)
        for i in range(4):
            manual = optimize(logits[i : i + 1], anchor[i : i + 1], cfg)
            assert np.array_equal(res.weights[i], manual.weights)
            assert res.iterations[i] == manual.iterations_used
            assert res.converged[i] == manual.converged

    def test_requires_single_sample_mode(self, rng):
        logits, anchor = random_instance(rng, 4, 3, 4, 0.5)
        with pytest.raises(ValueError):
            optimize_per_sample(logits, anchor, OptimizerConfig.for_dataset())


class TestGridSearch:
    def test_identical_templates_return_center(self):
        logits, anchor = identical_template_instance(n_templates=2)
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=0.1, tau=0.5)
        w = grid_search_weights(logits, anchor, cfg, 0.05)
        np.testing.assert_array_equal(w, [0.5, 0.5])

    def test_huge_barrier_returns_uniform_three_templates(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=1e3, tau=0.5)
        logits, anchor = random_instance(rng, 4, 3, 3, cfg.tau)
        w = grid_search_weights(logits, anchor, cfg, 0.1)
        # 1/3 is not a grid point at step 0.1; the minimizer is the closest
        # grid neighbor of uniform
        assert np.abs(w - 1 / 3).max() <= 0.1 / 2 + 1e-12

    def test_too_many_templates_rejected(self, rng):
        cfg = OptimizerConfig.for_dataset()
        logits, anchor = random_instance(rng, 2, 4, 3, cfg.tau)
        with pytest.raises(ValueError):
            grid_search_weights(logits, anchor, cfg, 0.1)

    def test_bad_step_rejected(self, rng):
        cfg = OptimizerConfig.for_dataset()
        logits, anchor = random_instance(rng, 2, 2, 3, cfg.tau)
        with pytest.raises(ValueError):
            grid_search_weights(logits, anchor, cfg, 0.0)
