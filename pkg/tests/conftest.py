import numpy as np
import pytest

from sevfuse.boost import TrainConfig


def fast_config(**overrides):
    """Small trainer settings shared by the cross-validation tests."""
    base = dict(n_trees=60, learning_rate=0.3, max_depth=4, min_child_weight=1.0,
                subsample=0.9, colsample=0.25, early_stopping_rounds=10,
                n_bins=64, seed=42)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
