"""Prune schedule arithmetic and the prune-and-reoptimize loop."""

import numpy as np
import pytest

from promptweight import (
    OptimizerConfig,
    PruneSchedule,
    SyntheticConfig,
    compute_logit_tensor,
    generate_synthetic,
    optimize,
    optimize_with_pruning,
    prune_weights,
    schedule_survivor_counts,
    zero_shot_predictions,
)
from helpers import random_instance


class TestSchedule:
    def test_default_35_template_trajectory(self):
        counts = schedule_survivor_counts(35, PruneSchedule())
        assert counts == [35, 29, 24, 20, 17]

    def test_trajectory_is_data_independent(self):
        # the counts depend only on (num_templates, schedule)
        sched = PruneSchedule(cycles=3, fraction_per_cycle=0.25)
        assert schedule_survivor_counts(16, sched) == [16, 12, 9, 7]

    def test_exact_integer_products_do_not_overshoot(self):
        # 0.15 * 20 must remove exactly 3 despite float representation
        assert schedule_survivor_counts(20, PruneSchedule(cycles=1)) == [20, 17]

    def test_emptying_schedule_rejected(self):
        with pytest.raises(ValueError):
            schedule_survivor_counts(2, PruneSchedule(cycles=2, fraction_per_cycle=0.9))

    def test_invalid_schedule_fields(self):
        with pytest.raises(ValueError):
            PruneSchedule(cycles=0)
        with pytest.raises(ValueError):
            PruneSchedule(fraction_per_cycle=0.0)
        with pytest.raises(ValueError):
            PruneSchedule(fraction_per_cycle=1.0)


class TestPruneWeights:
    def test_drops_smallest_and_renormalizes(self):
        w = np.array([0.5, 0.1, 0.25, 0.15])
        mask = np.ones(4, dtype=bool)
        new_mask, new_w = prune_weights(w, mask, 0.3)  # ceil(1.2) = 2 removed
        assert new_mask.tolist() == [True, False, True, False]
        np.testing.assert_allclose(new_w, [0.5 / 0.75, 0.0, 0.25 / 0.75, 0.0])

    def test_tie_breaks_drop_larger_index(self):
        w = np.full(2, 0.5)
        new_mask, new_w = prune_weights(w, np.ones(2, dtype=bool), 0.15)
        assert new_mask.tolist() == [True, False]
        np.testing.assert_array_equal(new_w, [1.0, 0.0])

    def test_respects_existing_mask(self):
        w = np.array([0.6, 0.0, 0.4, 0.0])
        mask = np.array([True, False, True, False])
        new_mask, new_w = prune_weights(w, mask, 0.5)
        assert new_mask.tolist() == [True, False, False, False]
        np.testing.assert_array_equal(new_w, [1.0, 0.0, 0.0, 0.0])

    def test_single_active_template_rejected(self):
        w = np.array([1.0, 0.0])
        mask = np.array([True, False])
        with pytest.raises(ValueError, match="every template"):
            prune_weights(w, mask, 0.15)

    def test_nonzero_weight_off_mask_rejected(self):
        w = np.array([0.5, 0.5])
        mask = np.array([True, False])
        with pytest.raises(ValueError, match="zero on inactive"):
            prune_weights(w, mask, 0.5)


class TestOptimizeWithPruning:
    def cfg(self, **kw):
        return OptimizerConfig.for_dataset(**kw)

    def test_masks_and_simplex_invariants(self, golden_logits, golden_anchor):
        res = optimize_with_pruning(
            golden_logits, golden_anchor, self.cfg(), PruneSchedule()
        )
        assert res.active_mask is not None
        active = res.active_mask
        assert active.sum() == schedule_survivor_counts(5, PruneSchedule())[-1]
        assert np.all(res.weights[~active] == 0.0)
        assert abs(res.weights[active].sum() - 1.0) < 1e-9
        assert res.weights[active].min() >= 0.0

    def test_noise_templates_deactivated(self):
        ds = generate_synthetic(
            SyntheticConfig(
                num_samples=120,
                num_templates=10,
                num_classes=6,
                dim=32,
                clean_template_count=8,
                noise_sigma=0.15,
                seed=11,
            )
        )
        logits = compute_logit_tensor(ds)
        anchor = zero_shot_predictions(logits, 0)
        res = optimize_with_pruning(logits, anchor, self.cfg(), PruneSchedule())
        # templates 8 and 9 are pure noise
        assert not res.active_mask[8]
        assert not res.active_mask[9]

    def test_single_cycle_removes_one_lowest_template(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=0.3, tau=0.5, tol=1e-10, max_iters=500)
        logits, anchor = random_instance(rng, 6, 5, 4, cfg.tau)
        sched = PruneSchedule(cycles=1, fraction_per_cycle=0.05)  # ceil(0.25) = 1
        first = optimize(logits, anchor, cfg)
        res = optimize_with_pruning(logits, anchor, cfg, sched)
        assert res.active_mask.sum() == 4
        assert not res.active_mask[int(first.weights.argmin())]

    def test_final_pass_equals_plain_optimize_on_survivors(self, rng):
        cfg = OptimizerConfig(lambda_zs=0.1, lambda_beta=0.3, tau=0.5, tol=1e-10, max_iters=500)
        logits, anchor = random_instance(rng, 6, 5, 4, cfg.tau)
        sched = PruneSchedule(cycles=1, fraction_per_cycle=0.05)
        res = optimize_with_pruning(logits, anchor, cfg, sched)

        first = optimize(logits, anchor, cfg)
        mask, pruned = prune_weights(
            first.weights, np.ones(5, dtype=bool), sched.fraction_per_cycle
        )
        active = np.flatnonzero(mask)
        manual = optimize(
            logits[:, active, :], anchor, cfg, init_weights=pruned[active]
        )
        assert np.array_equal(res.weights[active], manual.weights)
        assert np.array_equal(res.active_mask, mask)

    def test_requires_dataset_mode(self, rng):
        logits, anchor = random_instance(rng, 1, 4, 3, 0.5)
        with pytest.raises(ValueError, match="dataset"):
            optimize_with_pruning(
                logits, anchor, OptimizerConfig.for_single_sample(), PruneSchedule()
            )

    def test_infeasible_schedule_rejected_up_front(self, rng):
        logits, anchor = random_instance(rng, 2, 2, 3, 0.5)
        with pytest.raises(ValueError, match="empties"):
            optimize_with_pruning(
                logits,
                anchor,
                self.cfg(),
                PruneSchedule(cycles=1, fraction_per_cycle=0.99),
            )
