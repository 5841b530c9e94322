"""Accuracy metrics, per-template diagnostics, and the comparison suite.

The suite runs the zero-shot anchor, the six ensembling baselines, and the
three optimized-weight modes (per-sample, dataset, pruned dataset) on one
dataset, timing each method. Shared precomputation (the logit tensor and
anchor predictions, analogous to encoding) is excluded from the per-method
timings.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselines import (
    average_embedding_predict,
    canonical_baselines,
    majority_vote,
    vote_score_matrix,
)
from .data import EmbeddingDataset
from .engine import (
    DEFAULT_TAU,
    compute_logit_tensor,
    row_entropies,
    zero_shot_predictions,
)
from .optimizer import (
    DATASET_LAMBDA_ZS,
    SINGLE_SAMPLE_LAMBDA_ZS,
    OptimizerConfig,
    optimize,
    optimize_per_sample,
)
from .pruning import PruneSchedule, optimize_with_pruning


@dataclass(frozen=True)
class MethodReport:
    name: str
    accuracy: Optional[float]  # None when the dataset is unlabeled
    mean_entropy: float
    seconds: float
    weights: Optional[np.ndarray] = None
    active_mask: Optional[np.ndarray] = None


@dataclass(frozen=True)
class TemplateSweep:
    """Accuracy of each single-template argmax classifier."""

    accuracies: np.ndarray

    @property
    def min(self) -> float:
        return float(self.accuracies.min())

    @property
    def max(self) -> float:
        return float(self.accuracies.max())

    @property
    def mean(self) -> float:
        return float(self.accuracies.mean())

    @property
    def stddev(self) -> float:
        return float(self.accuracies.std())


@dataclass(frozen=True)
class SuiteConfig:
    tau: float = DEFAULT_TAU
    lambda_beta: float = 0.01
    lambda_zs_single: float = SINGLE_SAMPLE_LAMBDA_ZS
    lambda_zs_dataset: float = DATASET_LAMBDA_ZS
    tol: float = 1e-6
    max_iters: int = 100
    schedule: PruneSchedule = field(default_factory=PruneSchedule)
    threads: int = 1  # echoed in reports; kernels are serial and deterministic

    def echo(self) -> dict:
        return {
            "tau": self.tau,
            "lambda_beta": self.lambda_beta,
            "lambda_zs_single": self.lambda_zs_single,
            "lambda_zs_dataset": self.lambda_zs_dataset,
            "tol": self.tol,
            "max_iters": self.max_iters,
            "prune_cycles": self.schedule.cycles,
            "prune_fraction": self.schedule.fraction_per_cycle,
            "threads": self.threads,
        }


def accuracy(predictions, labels) -> float:
    """Fraction of exact class matches."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.size == 0:
        raise ValueError("empty prediction vector")
    if p.shape != y.shape:
        raise ValueError("predictions and labels must have equal length")
    return float(np.mean(p == y))


def per_template_sweep(logits: np.ndarray, labels) -> TemplateSweep:
    """Accuracy of each template used alone (argmax of its logit slice)."""
    if labels is None:
        raise ValueError("per-template sweep requires labels")
    y = np.asarray(labels)
    preds = logits.argmax(axis=2)  # (n_s, n_t)
    return TemplateSweep((preds == y[:, None]).mean(axis=0))


def _prob_report(name, probs, labels, seconds, weights=None, active_mask=None):
    acc = accuracy(probs.argmax(axis=1), labels) if labels is not None else None
    return MethodReport(
        name=name,
        accuracy=acc,
        mean_entropy=float(row_entropies(probs).mean()),
        seconds=seconds,
        weights=weights,
        active_mask=active_mask,
    )


def _vote_report(name, scores, labels, seconds):
    # vote scores are nonnegative; their normalized shares act as the
    # prediction distribution for the entropy column
    shares = scores / scores.sum(axis=1, keepdims=True)
    preds = scores.argmax(axis=1)
    acc = accuracy(preds, labels) if labels is not None else None
    return MethodReport(
        name=name,
        accuracy=acc,
        mean_entropy=float(row_entropies(shares).mean()),
        seconds=seconds,
    )


def run_suite(ds: EmbeddingDataset, config: SuiteConfig | None = None) -> list[MethodReport]:
    """Run every method on one dataset and report accuracy/entropy/timing."""
    config = config or SuiteConfig()
    logits = compute_logit_tensor(ds)
    anchor = zero_shot_predictions(logits, ds.zero_shot_template_index, config.tau)
    labels = ds.labels

    reports: list[MethodReport] = []

    start = time.perf_counter()
    reports.append(
        _prob_report("zero_shot", anchor, labels, time.perf_counter() - start)
    )

    for name, spec in canonical_baselines():
        start = time.perf_counter()
        if spec.family == "majority_vote":
            scores = vote_score_matrix(logits, config.tau, spec)
            reports.append(_vote_report(name, scores, labels, time.perf_counter() - start))
        else:
            _, probs = average_embedding_predict(ds, config.tau, spec, logits=logits)
            reports.append(_prob_report(name, probs, labels, time.perf_counter() - start))

    common = dict(
        lambda_beta=config.lambda_beta,
        tau=config.tau,
        tol=config.tol,
        max_iters=config.max_iters,
    )

    start = time.perf_counter()
    per_sample = optimize_per_sample(
        logits,
        anchor,
        OptimizerConfig.for_single_sample(lambda_zs=config.lambda_zs_single, **common),
    )
    reports.append(
        _prob_report(
            "single_sample_weights",
            per_sample.predictions,
            labels,
            time.perf_counter() - start,
            weights=per_sample.weights.mean(axis=0),
        )
    )

    dataset_cfg = OptimizerConfig.for_dataset(
        lambda_zs=config.lambda_zs_dataset, **common
    )

    start = time.perf_counter()
    res = optimize(logits, anchor, dataset_cfg)
    reports.append(
        _prob_report(
            "dataset_weights",
            res.predictions,
            labels,
            time.perf_counter() - start,
            weights=res.weights,
        )
    )

    start = time.perf_counter()
    pruned = optimize_with_pruning(logits, anchor, dataset_cfg, config.schedule)
    reports.append(
        _prob_report(
            "pruned_dataset_weights",
            pruned.predictions,
            labels,
            time.perf_counter() - start,
            weights=pruned.weights,
            active_mask=pruned.active_mask,
        )
    )
    return reports


def report_to_json(
    reports: list[MethodReport],
    ds: EmbeddingDataset,
    config: SuiteConfig,
    source_path: str | None = None,
) -> dict:
    """JSON-serializable suite report.

    Schema: {dataset: {path, dims}, methods: [{name, accuracy?, mean_entropy,
    seconds, beta?, active_mask?}], config_echo}. ``beta`` carries the
    template weights where a method has them; ``accuracy`` is omitted for
    unlabeled datasets.
    """
    methods = []
    for r in reports:
        entry: dict = {
            "name": r.name,
            "mean_entropy": r.mean_entropy,
            "seconds": r.seconds,
        }
        if r.accuracy is not None:
            entry["accuracy"] = r.accuracy
        if r.weights is not None:
            entry["beta"] = [float(v) for v in r.weights]
        if r.active_mask is not None:
            entry["active_mask"] = [bool(v) for v in r.active_mask]
        methods.append(entry)
    return {
        "dataset": {
            "path": source_path,
            "dims": {
                "num_samples": ds.num_samples,
                "num_templates": ds.num_templates,
                "num_classes": ds.num_classes,
                "dim": ds.dim,
            },
        },
        "methods": methods,
        "config_echo": config.echo(),
    }


def format_table(reports: list[MethodReport]) -> str:
    """Aligned text table of the suite results."""
    header = f"{'method':<36} {'accuracy':>9} {'mean_entropy':>13} {'seconds':>9}"
    lines = [header, "-" * len(header)]
    for r in reports:
        acc = f"{r.accuracy:.4f}" if r.accuracy is not None else "-"
        lines.append(
            f"{r.name:<36} {acc:>9} {r.mean_entropy:>13.4f} {r.seconds:>9.3f}"
        )
    return "\n".join(lines)
