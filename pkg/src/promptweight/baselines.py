"""Ensembling baselines: majority voting and average-text-embedding
families, each in uniform, inverse-entropy-weighted, and pruned variants.

Votes use per-sample entropies; pruning and embedding weighting use the
mean per-sample entropy of each template, so all variants share one
dataset-level template ranking.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import EmbeddingDataset
from .engine import DEFAULT_TAU, compute_logit_tensor, softmax_predictions

FAMILY_MAJORITY_VOTE = "majority_vote"
FAMILY_AVERAGE_EMBEDDING = "average_embedding"

WEIGHTING_UNIFORM = "uniform"
WEIGHTING_INVERSE_ENTROPY = "inverse_entropy"

# floor inside 1 / (entropy + eps) so numerically zero entropies survive
ENTROPY_WEIGHT_EPS = 1e-6

_CEIL_SLOP = 1e-9


class DegenerateClassError(Exception):
    """A class's weighted embedding sum vanished and cannot be normalized."""


@dataclass(frozen=True)
class BaselineSpec:
    family: str
    weighting: str = WEIGHTING_UNIFORM
    prune_fraction: float = 0.0

    def __post_init__(self):
        if self.family not in (FAMILY_MAJORITY_VOTE, FAMILY_AVERAGE_EMBEDDING):
            raise ValueError(f"unknown family {self.family!r}")
        if self.weighting not in (WEIGHTING_UNIFORM, WEIGHTING_INVERSE_ENTROPY):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if not 0.0 <= self.prune_fraction < 1.0:
            raise ValueError("prune_fraction must lie in [0, 1)")


def canonical_baselines() -> list[tuple[str, BaselineSpec]]:
    """The six standard (name, spec) pairs used by the comparison suite."""
    mv, ae = FAMILY_MAJORITY_VOTE, FAMILY_AVERAGE_EMBEDDING
    return [
        ("majority_vote", BaselineSpec(mv)),
        ("majority_vote_entropy_weighted", BaselineSpec(mv, WEIGHTING_INVERSE_ENTROPY)),
        ("majority_vote_pruned", BaselineSpec(mv, prune_fraction=0.5)),
        ("average_embedding", BaselineSpec(ae)),
        ("average_embedding_entropy_weighted", BaselineSpec(ae, WEIGHTING_INVERSE_ENTROPY)),
        ("average_embedding_pruned", BaselineSpec(ae, prune_fraction=0.5)),
    ]


def template_entropy_scores(logits: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Mean per-sample prediction entropy of each single-template classifier."""
    n_s, n_t, n_c = logits.shape
    flat = np.ascontiguousarray(logits.reshape(n_s * n_t, n_c)) / tau
    p = kernels.softmax_rows(flat)
    return kernels.row_entropies(p).reshape(n_s, n_t).mean(axis=0)


def _per_sample_entropies(logits: np.ndarray, tau: float) -> np.ndarray:
    """Entropy of each (sample, template) prediction row, shape (n_s, n_t)."""
    n_s, n_t, n_c = logits.shape
    flat = np.ascontiguousarray(logits.reshape(n_s * n_t, n_c)) / tau
    p = kernels.softmax_rows(flat)
    return kernels.row_entropies(p).reshape(n_s, n_t)


def entropy_pruned_survivors(scores: np.ndarray, prune_fraction: float) -> np.ndarray:
    """Indices surviving removal of the highest-mean-entropy templates.

    Removes ceil(prune_fraction * num_templates); ties are pruned at the
    larger template index first. Raises ValueError if nothing would survive.
    """
    n_t = scores.size
    removed = math.ceil(prune_fraction * n_t - _CEIL_SLOP)
    if removed >= n_t:
        raise ValueError("pruning would drop every template")
    idx = np.arange(n_t)
    order = np.lexsort((-idx, -scores))  # entropy descending, index descending in ties
    dropped = order[:removed]
    keep = np.ones(n_t, dtype=bool)
    keep[dropped] = False
    return np.flatnonzero(keep)


def vote_score_matrix(
    logits: np.ndarray, tau: float = DEFAULT_TAU, spec: BaselineSpec | None = None
) -> np.ndarray:
    """Per-class accumulated vote weight for each sample, shape (n_s, n_c).

    Every template votes for its argmax class. Uniform votes weigh 1;
    inverse-entropy votes weigh 1 / (H + eps) with H that template's
    prediction entropy for that sample. With pruning, the highest-entropy
    templates are dropped first and the rest vote uniformly.
    """
    spec = spec or BaselineSpec(FAMILY_MAJORITY_VOTE)
    if spec.family != FAMILY_MAJORITY_VOTE:
        raise ValueError("vote scores require a majority_vote spec")
    n_s, n_t, n_c = logits.shape
    if spec.prune_fraction > 0:
        survivors = entropy_pruned_survivors(
            template_entropy_scores(logits, tau), spec.prune_fraction
        )
        sub = logits[:, survivors, :]
        vote_weights = np.ones((n_s, survivors.size))
    elif spec.weighting == WEIGHTING_INVERSE_ENTROPY:
        sub = logits
        vote_weights = 1.0 / (_per_sample_entropies(logits, tau) + ENTROPY_WEIGHT_EPS)
    else:
        sub = logits
        vote_weights = np.ones((n_s, n_t))

    votes = sub.argmax(axis=2)  # (n_s, n_active)
    scores = np.zeros((n_s, n_c))
    rows = np.arange(n_s)
    for col in range(votes.shape[1]):
        scores[rows, votes[:, col]] += vote_weights[:, col]
    return scores


def majority_vote(
    logits: np.ndarray, tau: float = DEFAULT_TAU, spec: BaselineSpec | None = None
) -> np.ndarray:
    """Predicted class per sample; vote ties resolve to the lowest class index."""
    return vote_score_matrix(logits, tau, spec).argmax(axis=1)


def average_embedding_predict(
    ds: EmbeddingDataset,
    tau: float = DEFAULT_TAU,
    spec: BaselineSpec | None = None,
    logits: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Classify against one averaged text embedding per class.

    Per class, the template embeddings are summed (uniformly, weighted by
    inverse mean entropy, or uniformly over entropy-pruned survivors),
    re-normalized to the unit sphere, and scored by cosine + softmax.
    Returns (predicted classes, probability matrix). ``logits`` is only
    needed for the entropy-based variants and is computed if omitted.
    """
    spec = spec or BaselineSpec(FAMILY_AVERAGE_EMBEDDING)
    if spec.family != FAMILY_AVERAGE_EMBEDDING:
        raise ValueError("average_embedding_predict requires an average_embedding spec")
    text = ds.text.astype(np.float64)
    n_t = ds.num_templates

    if spec.prune_fraction > 0 or spec.weighting == WEIGHTING_INVERSE_ENTROPY:
        if logits is None:
            logits = compute_logit_tensor(ds)
        scores = template_entropy_scores(logits, tau)

    if spec.prune_fraction > 0:
        survivors = entropy_pruned_survivors(scores, spec.prune_fraction)
        weights = np.zeros(n_t)
        weights[survivors] = 1.0
    elif spec.weighting == WEIGHTING_INVERSE_ENTROPY:
        weights = 1.0 / (scores + ENTROPY_WEIGHT_EPS)
    else:
        weights = np.ones(n_t)

    summed = np.einsum("j,jkd->kd", weights, text)
    norms = np.linalg.norm(summed, axis=1)
    if np.any(norms == 0.0):
        bad = np.flatnonzero(norms == 0.0)
        raise DegenerateClassError(
            f"averaged embedding vanished for class indices {bad.tolist()}"
        )
    averaged = summed / norms[:, None]
    bar = ds.audio.astype(np.float64) @ averaged.T
    probs = softmax_predictions(bar, tau)
    return probs.argmax(axis=1), probs
