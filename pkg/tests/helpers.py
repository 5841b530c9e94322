"""Small test utilities shared across modules."""

import numpy as np

from promptweight import objective, softmax_predictions


def random_instance(rng, n_samples, n_templates, n_classes, tau):
    """Random logit tensor in [-1, 1] plus anchor predictions from one slice."""
    logits = rng.uniform(-1.0, 1.0, (n_samples, n_templates, n_classes))
    j0 = int(rng.integers(n_templates))
    anchor = softmax_predictions(logits[:, j0, :], tau)
    return logits, anchor


def finite_difference_gradient(weights, logits, anchor, cfg, h=1e-6):
    """Centered finite differences of the objective, coordinate by coordinate."""
    g = np.empty(weights.size)
    for j in range(weights.size):
        e = np.zeros(weights.size)
        e[j] = h
        g[j] = (
            objective(weights + e, logits, anchor, cfg)
            - objective(weights - e, logits, anchor, cfg)
        ) / (2.0 * h)
    return g
