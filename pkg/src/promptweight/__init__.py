"""Entropy-guided weighting of prompt-template ensembles for zero-shot
embedding classifiers.

Given unit-normalized audio (or other modality) embeddings and per-template
per-class text embeddings, the library fits a simplex-constrained weight
vector over the templates by driving the weighted predictions toward low
entropy, anchored to the single-template zero-shot predictions. Six
voting/averaging ensembling baselines and an iterative template-pruning
driver ship alongside for comparison.
"""

from .baselines import (
    BaselineSpec,
    DegenerateClassError,
    average_embedding_predict,
    canonical_baselines,
    entropy_pruned_survivors,
    majority_vote,
    template_entropy_scores,
    vote_score_matrix,
)
from .data import (
    DatasetError,
    EmbeddingDataset,
    SyntheticConfig,
    generate_synthetic,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from .engine import (
    DEFAULT_TAU,
    compute_logit_tensor,
    cross_entropy,
    entropy,
    row_cross_entropies,
    row_entropies,
    softmax_predictions,
    weighted_logits,
    zero_shot_predictions,
)
from .evaluate import (
    MethodReport,
    SuiteConfig,
    TemplateSweep,
    accuracy,
    format_table,
    per_template_sweep,
    report_to_json,
    run_suite,
)
from .kernels import active_backend
from .optimizer import (
    OptimizationResult,
    OptimizerConfig,
    PerSampleResult,
    contribution_scores,
    fixed_point_step,
    grid_search_weights,
    objective,
    optimize,
    optimize_per_sample,
)
from .pruning import (
    PruneSchedule,
    optimize_with_pruning,
    prune_weights,
    schedule_survivor_counts,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineSpec",
    "DatasetError",
    "DegenerateClassError",
    "DEFAULT_TAU",
    "EmbeddingDataset",
    "MethodReport",
    "OptimizationResult",
    "OptimizerConfig",
    "PerSampleResult",
    "PruneSchedule",
    "SuiteConfig",
    "SyntheticConfig",
    "TemplateSweep",
    "accuracy",
    "active_backend",
    "average_embedding_predict",
    "canonical_baselines",
    "compute_logit_tensor",
    "contribution_scores",
    "cross_entropy",
    "entropy",
    "entropy_pruned_survivors",
    "fixed_point_step",
    "format_table",
    "generate_synthetic",
    "grid_search_weights",
    "load_dataset",
    "majority_vote",
    "objective",
    "optimize",
    "optimize_per_sample",
    "optimize_with_pruning",
    "per_template_sweep",
    "prune_weights",
    "report_to_json",
    "row_cross_entropies",
    "row_entropies",
    "run_suite",
    "save_dataset",
    "schedule_survivor_counts",
    "softmax_predictions",
    "template_entropy_scores",
    "validate_dataset",
    "vote_score_matrix",
    "weighted_logits",
    "zero_shot_predictions",
]
