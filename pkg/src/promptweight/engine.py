"""Prediction engine: cosine logit tensor, weighted logits, temperature
softmax, and the entropy functionals consumed by the weight optimizer."""

import numpy as np

from . import kernels
from .data import EmbeddingDataset

# Softmax temperature matching an encoder logit scale of 33.3.
DEFAULT_TAU = 1.0 / 33.3

PROB_EPS = kernels.PROB_EPS


def compute_logit_tensor(ds: EmbeddingDataset) -> np.ndarray:
    """Cosine scores of every (sample, template, class) triple.

    Returns a float64 array of shape (num_samples, num_templates,
    num_classes); rows are unit vectors so entries lie in [-1, 1]. Computed
    once per dataset and reused by every downstream consumer.
    """
    n_s, n_t, n_c, dim = ds.dims
    audio = ds.audio.astype(np.float64)
    text = ds.text.astype(np.float64).reshape(n_t * n_c, dim)
    return (audio @ text.T).reshape(n_s, n_t, n_c)


def flat_logit_layout(logits: np.ndarray) -> np.ndarray:
    """Reshape (samples, templates, classes) into the contiguous
    (samples * classes, templates) layout the kernels contract against."""
    n_s, n_t, n_c = logits.shape
    return np.ascontiguousarray(logits.transpose(0, 2, 1).reshape(n_s * n_c, n_t))


def weighted_logits(logits: np.ndarray, weights) -> np.ndarray:
    """Per-class logits averaged over templates with the given weights."""
    n_s, n_t, n_c = logits.shape
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n_t,):
        raise ValueError(f"expected {n_t} template weights, got shape {w.shape}")
    flat = flat_logit_layout(logits)
    return kernels.weighted_logits_flat(flat, w).reshape(n_s, n_c)


def softmax_predictions(bar_logits: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Temperature-scaled softmax over the class axis, row-max subtracted."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    scores = np.asarray(bar_logits, dtype=np.float64) / tau
    return kernels.softmax_rows(scores)


def entropy(p) -> float:
    """Shannon entropy in nats of one probability row."""
    row = np.asarray(p, dtype=np.float64).reshape(1, -1)
    return float(kernels.row_entropies(row)[0])


def cross_entropy(p, q) -> float:
    """Cross-entropy in nats of one probability row pair."""
    pr = np.asarray(p, dtype=np.float64).reshape(1, -1)
    qr = np.asarray(q, dtype=np.float64).reshape(1, -1)
    if pr.shape != qr.shape:
        raise ValueError("p and q must have the same length")
    return float(kernels.row_cross_entropies(pr, qr)[0])


def row_entropies(p: np.ndarray) -> np.ndarray:
    """Entropy of each row of a probability matrix."""
    return kernels.row_entropies(np.asarray(p, dtype=np.float64))


def row_cross_entropies(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Cross-entropy of each aligned row pair of two probability matrices."""
    pa = np.asarray(p, dtype=np.float64)
    qa = np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise ValueError("p and q must have the same shape")
    return kernels.row_cross_entropies(pa, qa)


def zero_shot_predictions(
    logits: np.ndarray, template_index: int, tau: float = DEFAULT_TAU
) -> np.ndarray:
    """Softmax predictions of the single anchor template."""
    n_t = logits.shape[1]
    if not 0 <= template_index < n_t:
        raise IndexError(f"template index {template_index} out of range [0, {n_t})")
    return softmax_predictions(logits[:, template_index, :], tau)
