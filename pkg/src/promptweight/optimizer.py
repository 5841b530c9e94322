"""Simplex-constrained optimization of template weights.

The objective combines mean prediction entropy, a cross-entropy anchor to
the zero-shot predictions, and an entropy barrier on the weights:

    F(w) = mean_i[ H(p_i(w)) + lambda_zs * H(p_i(w), anchor_i) ]
           - lambda_beta * H(w)

Interior stationary points satisfy w = softmax(S / lambda_beta) where S is
the per-template contribution sum of :func:`contribution_scores` scaled by
1 / (num_samples * tau); the scale is forced by differentiating the
averaged, temperature-scaled objective above.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .engine import DEFAULT_TAU, PROB_EPS, flat_logit_layout

MODE_DATASET = "dataset"
MODE_SINGLE_SAMPLE = "single_sample"

# Anchor regularization defaults: strong when fitting one sample at a time,
# weak when a whole dataset constrains the weights.
SINGLE_SAMPLE_LAMBDA_ZS = 100.0
DATASET_LAMBDA_ZS = 0.1


@dataclass(frozen=True)
class OptimizerConfig:
    lambda_zs: float
    lambda_beta: float = 0.01
    tau: float = DEFAULT_TAU
    max_iters: int = 100
    tol: float = 1e-6
    mode: str = MODE_DATASET

    def __post_init__(self):
        if self.lambda_zs < 0:
            raise ValueError("lambda_zs must be >= 0")
        if self.lambda_beta <= 0:
            raise ValueError("lambda_beta must be > 0")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.mode not in (MODE_DATASET, MODE_SINGLE_SAMPLE):
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def for_dataset(cls, **overrides) -> "OptimizerConfig":
        overrides.setdefault("lambda_zs", DATASET_LAMBDA_ZS)
        overrides.setdefault("mode", MODE_DATASET)
        return cls(**overrides)

    @classmethod
    def for_single_sample(cls, **overrides) -> "OptimizerConfig":
        overrides.setdefault("lambda_zs", SINGLE_SAMPLE_LAMBDA_ZS)
        overrides.setdefault("mode", MODE_SINGLE_SAMPLE)
        return cls(**overrides)


@dataclass(frozen=True)
class OptimizationResult:
    weights: np.ndarray  # (num_templates,) on the simplex
    iterations_used: int
    objective_trace: np.ndarray  # length iterations_used + 1, starts at the initial weights
    converged: bool
    predictions: np.ndarray  # (num_samples, num_classes) at the final weights
    active_mask: Optional[np.ndarray] = None  # set by the pruning driver


@dataclass(frozen=True)
class PerSampleResult:
    """Independent weight vectors fitted one sample at a time."""

    weights: np.ndarray  # (num_samples, num_templates)
    predictions: np.ndarray  # (num_samples, num_classes)
    iterations: np.ndarray  # (num_samples,) int
    converged: np.ndarray  # (num_samples,) bool


def _weights_entropy(w: np.ndarray) -> float:
    return float(-(w * np.log(np.maximum(w, PROB_EPS))).sum())


def _check_inputs(logits, anchor):
    if logits.ndim != 3:
        raise ValueError("logits must have shape (samples, templates, classes)")
    n_s, _, n_c = logits.shape
    if anchor.shape != (n_s, n_c):
        raise ValueError(
            f"anchor shape {anchor.shape} does not match logits {(n_s, n_c)}"
        )


def objective(weights, logits, anchor, cfg: OptimizerConfig) -> float:
    """Objective value at the given weights.

    Evaluates the formula as written, so slightly off-simplex weights (e.g.
    finite-difference probes) are accepted.
    """
    logits = np.asarray(logits, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    _check_inputs(logits, anchor)
    w = np.asarray(weights, dtype=np.float64)
    n_s, n_t, n_c = logits.shape
    if w.shape != (n_t,):
        raise ValueError(f"expected {n_t} weights, got shape {w.shape}")
    flat = flat_logit_layout(logits)
    bar = kernels.weighted_logits_flat(flat, w).reshape(n_s, n_c)
    p = kernels.softmax_rows(bar / cfg.tau)
    data = kernels.row_entropies(p) + cfg.lambda_zs * kernels.row_cross_entropies(p, anchor)
    return float(data.mean() - cfg.lambda_beta * _weights_entropy(w))


def contribution_scores(weights, logits, anchor, cfg: OptimizerConfig) -> np.ndarray:
    """Raw per-template contribution sums.

    For template j this is the sum over samples i of

        sum_k p_ik (ln p_ik + H(p_i)) l_ijk
        + lambda_zs * sum_k p_ik (ln a_ik - E_{p_i}[ln a_i]) l_ijk

    with a the anchor rows and every probability clamped at PROB_EPS inside
    the logs. The sums are unnormalized; :func:`optimize` rescales them by
    1 / (num_samples * tau) before the exponential update.
    """
    logits = np.asarray(logits, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    _check_inputs(logits, anchor)
    w = np.asarray(weights, dtype=np.float64)
    n_s, n_t, n_c = logits.shape
    if w.shape != (n_t,):
        raise ValueError(f"expected {n_t} weights, got shape {w.shape}")
    flat = flat_logit_layout(logits)
    bar = kernels.weighted_logits_flat(flat, w).reshape(n_s, n_c)
    p = kernels.softmax_rows(bar / cfg.tau)
    log_p = np.log(np.maximum(p, PROB_EPS))
    log_anchor = np.log(np.maximum(anchor, PROB_EPS))
    return kernels.contribution_scores_flat(flat, p, log_p, log_anchor, cfg.lambda_zs)


def fixed_point_step(scores, lambda_beta: float) -> np.ndarray:
    """Map contribution scores to simplex weights: softmax(scores / lambda_beta)."""
    if lambda_beta <= 0:
        raise ValueError("lambda_beta must be > 0")
    scaled = np.asarray(scores, dtype=np.float64) / lambda_beta
    return kernels.softmax_rows(scaled.reshape(1, -1))[0]


def optimize(
    logits,
    anchor,
    cfg: OptimizerConfig,
    init_weights=None,
) -> OptimizationResult:
    """Run the fixed-point iteration from uniform (or given) weights.

    Stops when the L1 change of the weights drops below ``cfg.tol`` or after
    ``cfg.max_iters`` updates, whichever comes first; the raw map is applied
    undamped, so a non-converged result is returned as-is with
    ``converged=False``. The anchor predictions stay frozen throughout.
    """
    logits = np.asarray(logits, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    _check_inputs(logits, anchor)
    n_s, n_t, n_c = logits.shape
    if cfg.mode == MODE_SINGLE_SAMPLE and n_s != 1:
        raise ValueError("single_sample mode requires exactly one sample")

    if init_weights is None:
        w = np.full(n_t, 1.0 / n_t)
    else:
        w = np.asarray(init_weights, dtype=np.float64).copy()
        if w.shape != (n_t,):
            raise ValueError(f"init_weights must have shape ({n_t},)")
        if w.min() < 0 or abs(w.sum() - 1.0) > 1e-6:
            raise ValueError("init_weights must lie on the probability simplex")

    flat = flat_logit_layout(logits)
    log_anchor = np.log(np.maximum(anchor, PROB_EPS))
    scale = 1.0 / (n_s * cfg.tau)

    def state(weights):
        bar = kernels.weighted_logits_flat(flat, weights).reshape(n_s, n_c)
        p = kernels.softmax_rows(bar / cfg.tau)
        log_p = np.log(np.maximum(p, PROB_EPS))
        data = kernels.row_entropies(p) + cfg.lambda_zs * kernels.row_cross_entropies(
            p, anchor
        )
        obj = float(data.mean() - cfg.lambda_beta * _weights_entropy(weights))
        scores = kernels.contribution_scores_flat(flat, p, log_p, log_anchor, cfg.lambda_zs)
        return obj, scores, p

    obj, scores, p = state(w)
    trace = [obj]
    iterations = 0
    converged = False
    for _ in range(cfg.max_iters):
        new_w = fixed_point_step(scores * scale, cfg.lambda_beta)
        delta = float(np.abs(new_w - w).sum())
        w = new_w
        iterations += 1
        obj, scores, p = state(w)
        trace.append(obj)
        if delta < cfg.tol:
            converged = True
            break

    return OptimizationResult(
        weights=w,
        iterations_used=iterations,
        objective_trace=np.asarray(trace),
        converged=converged,
        predictions=p,
    )


def optimize_per_sample(logits, anchor, cfg: OptimizerConfig) -> PerSampleResult:
    """Fit an independent weight vector per sample (single-sample mode)."""
    if cfg.mode != MODE_SINGLE_SAMPLE:
        raise ValueError("optimize_per_sample requires a single_sample-mode config")
    logits = np.asarray(logits, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    _check_inputs(logits, anchor)
    n_s, n_t, n_c = logits.shape
    weights = np.empty((n_s, n_t))
    predictions = np.empty((n_s, n_c))
    iterations = np.empty(n_s, dtype=np.int64)
    converged = np.empty(n_s, dtype=bool)
    for i in range(n_s):
        res = optimize(logits[i : i + 1], anchor[i : i + 1], cfg)
        weights[i] = res.weights
        predictions[i] = res.predictions[0]
        iterations[i] = res.iterations_used
        converged[i] = res.converged
    return PerSampleResult(weights, predictions, iterations, converged)


def grid_search_weights(logits, anchor, cfg: OptimizerConfig, grid_step: float) -> np.ndarray:
    """Exhaustive simplex-grid minimizer of :func:`objective`.

    Only feasible for 2 or 3 templates. Ties resolve to the
    lexicographically smallest weight vector (the grid is enumerated in
    ascending lexicographic order with strict improvement).
    """
    logits = np.asarray(logits, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    _check_inputs(logits, anchor)
    n_t = logits.shape[1]
    if n_t not in (2, 3):
        raise ValueError("grid search supports only 2 or 3 templates")
    if not 0 < grid_step <= 1:
        raise ValueError("grid_step must lie in (0, 1]")
    steps = int(round(1.0 / grid_step))
    ticks = np.linspace(0.0, 1.0, steps + 1)

    best_w = None
    best_obj = np.inf
    if n_t == 2:
        for a in ticks:
            w = np.array([a, 1.0 - a])
            val = objective(w, logits, anchor, cfg)
            if val < best_obj:
                best_obj, best_w = val, w
    else:
        for i, a in enumerate(ticks):
            for b in ticks[: steps - i + 1]:
                w = np.array([a, b, max(1.0 - a - b, 0.0)])
                val = objective(w, logits, anchor, cfg)
                if val < best_obj:
                    best_obj, best_w = val, w
    return best_w
