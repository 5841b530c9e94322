"""Shared fixtures: the default synthetic scenario and its derived tensors."""

import numpy as np
import pytest

from promptweight import (
    SyntheticConfig,
    compute_logit_tensor,
    generate_synthetic,
    zero_shot_predictions,
)

# Default scenario used for golden values throughout the suite:
# 3 faithful templates plus 2 pure-noise templates.
GOLDEN_CONFIG = SyntheticConfig(
    num_samples=200,
    num_templates=5,
    num_classes=10,
    dim=64,
    clean_template_count=3,
    noise_sigma=0.1,
    seed=42,
)


@pytest.fixture(scope="session")
def golden_dataset():
    return generate_synthetic(GOLDEN_CONFIG)


@pytest.fixture(scope="session")
def golden_logits(golden_dataset):
    return compute_logit_tensor(golden_dataset)


@pytest.fixture(scope="session")
def golden_anchor(golden_logits, golden_dataset):
    return zero_shot_predictions(
        golden_logits, golden_dataset.zero_shot_template_index
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
