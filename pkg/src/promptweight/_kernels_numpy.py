"""Pure-numpy implementations of the hot kernels.

Twin of :mod:`promptweight._kernels_numba`; the active module is picked in
:mod:`promptweight.kernels` via the ``PROMPTWEIGHT_BACKEND`` env flag.
"""

import numpy as np

PROB_EPS = 1e-12

_MASK64 = (1 << 64) - 1


def softmax_rows(scores):
    """Row-wise softmax of a 2-D float64 array, max-subtracted for stability."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def row_entropies(p):
    """Shannon entropy (nats) of each row; terms with p <= PROB_EPS contribute 0."""
    return -(p * np.log(np.maximum(p, PROB_EPS))).sum(axis=1)


def row_cross_entropies(p, q):
    """Cross-entropy (nats) of each row pair, q clamped at PROB_EPS inside the log."""
    return -(p * np.log(np.maximum(q, PROB_EPS))).sum(axis=1)


def weighted_logits_flat(l_flat, weights):
    """Contract a (rows, num_templates) logit layout against template weights."""
    return l_flat @ weights


def contribution_scores_flat(l_flat, p, log_p, log_p_hat, lambda_zs):
    """Per-template contribution sums over all (sample, class) rows.

    ``l_flat`` has shape (num_samples * num_classes, num_templates) with the
    class index varying fastest; ``p``/``log_p``/``log_p_hat`` have shape
    (num_samples, num_classes).
    """
    ent = -(p * log_p).sum(axis=1)
    anchor_mean = (p * log_p_hat).sum(axis=1)
    w = p * ((log_p + ent[:, None]) + lambda_zs * (log_p_hat - anchor_mean[:, None]))
    return w.reshape(-1) @ l_flat


def xoshiro_fill(state, out):
    """Advance a xoshiro256** state (uint64[4]) in place, writing raw draws to out."""
    s0, s1, s2, s3 = (int(state[0]), int(state[1]), int(state[2]), int(state[3]))
    for i in range(out.shape[0]):
        r = (s1 * 5) & _MASK64
        r = ((((r << 7) | (r >> 57)) & _MASK64) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        out[i] = r
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
