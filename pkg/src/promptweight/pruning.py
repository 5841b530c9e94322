"""Iterative prune-and-reoptimize over the template set.

Each cycle optimizes the weights over the currently active templates, then
deactivates the lowest-weight fraction; the renormalized surviving weights
seed the next cycle. A final optimize pass runs after the last prune so
reported predictions always come from optimized weights.
"""

import math
from dataclasses import dataclass

import numpy as np

from .optimizer import MODE_DATASET, OptimizationResult, OptimizerConfig, optimize

# Tolerant ceiling so exact-integer products of float fractions (e.g.
# 0.15 * 20) do not round up one too far.
_CEIL_SLOP = 1e-9


@dataclass(frozen=True)
class PruneSchedule:
    cycles: int = 4
    fraction_per_cycle: float = 0.15

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if not 0.0 < self.fraction_per_cycle < 1.0:
            raise ValueError("fraction_per_cycle must lie in (0, 1)")


def _removal_count(fraction: float, active: int) -> int:
    return math.ceil(fraction * active - _CEIL_SLOP)


def schedule_survivor_counts(num_templates: int, schedule: PruneSchedule) -> list[int]:
    """Active-count trajectory [start, after cycle 1, ...]; data-independent.

    Raises ValueError if any cycle would deactivate every template.
    """
    counts = [num_templates]
    for _ in range(schedule.cycles):
        active = counts[-1]
        removed = _removal_count(schedule.fraction_per_cycle, active)
        if removed >= active:
            raise ValueError(
                f"schedule empties the template set (active={active}, removing {removed})"
            )
        counts.append(active - removed)
    return counts


def prune_weights(weights, mask, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    """Deactivate the lowest-weight active templates and renormalize the rest.

    Removes ceil(fraction * active_count) templates, ties resolved by
    deactivating the larger index first. Raises ValueError if that would
    leave no active template. Returns (new_mask, new_weights) with inactive
    entries exactly 0.
    """
    w = np.asarray(weights, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if w.shape != m.shape:
        raise ValueError("weights and mask must have the same length")
    if np.any(w[~m] != 0.0):
        raise ValueError("weights must be zero on inactive templates")
    active_idx = np.flatnonzero(m)
    active = active_idx.size
    removed = _removal_count(fraction, active)
    if removed >= active:
        raise ValueError(
            f"pruning would deactivate every template (active={active}, removing {removed})"
        )
    # sort by weight ascending, larger index first within ties
    order = np.lexsort((-active_idx, w[active_idx]))
    drop = active_idx[order[:removed]]
    new_mask = m.copy()
    new_mask[drop] = False
    new_w = np.zeros_like(w)
    survivors = np.flatnonzero(new_mask)
    new_w[survivors] = w[survivors] / w[survivors].sum()
    return new_mask, new_w


def optimize_with_pruning(
    logits, anchor, cfg: OptimizerConfig, schedule: PruneSchedule
) -> OptimizationResult:
    """Run the full prune-and-reoptimize cycle loop.

    The returned result carries full-length weights (zeros on inactive
    templates), the final active mask, and the trace/convergence data of the
    final optimize pass over the survivors.
    """
    if cfg.mode != MODE_DATASET:
        raise ValueError("pruning runs in dataset mode")
    logits = np.asarray(logits, dtype=np.float64)
    n_t = logits.shape[1]
    schedule_survivor_counts(n_t, schedule)  # validates feasibility up front

    mask = np.ones(n_t, dtype=bool)
    weights = np.full(n_t, 1.0 / n_t)
    for _ in range(schedule.cycles):
        active = np.flatnonzero(mask)
        res = optimize(logits[:, active, :], anchor, cfg, init_weights=weights[active])
        full = np.zeros(n_t)
        full[active] = res.weights
        mask, weights = prune_weights(full, mask, schedule.fraction_per_cycle)

    active = np.flatnonzero(mask)
    final = optimize(logits[:, active, :], anchor, cfg, init_weights=weights[active])
    full = np.zeros(n_t)
    full[active] = final.weights
    return OptimizationResult(
        weights=full,
        iterations_used=final.iterations_used,
        objective_trace=final.objective_trace,
        converged=final.converged,
        predictions=final.predictions,
        active_mask=mask,
    )
