import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kscn import (Experiment, gen_numerical, normalize_fit_apply,
                  split_shuffled)


@pytest.fixture(scope="session")
def numerical_experiment() -> Experiment:
    """The standard desk-scale setup: 600 samples, 200/100/300 seeded split."""
    raw = gen_numerical(600, seed=0)
    split = split_shuffled(600, 200, 100, seed=0)
    data = normalize_fit_apply(raw, split)
    return Experiment(raw=raw, data=data, split=split)


@pytest.fixture(scope="session")
def small_experiment() -> Experiment:
    """A cheap variant for loop-heavy tests."""
    raw = gen_numerical(120, seed=3)
    split = split_shuffled(120, 60, 30, seed=3)
    data = normalize_fit_apply(raw, split)
    return Experiment(raw=raw, data=data, split=split)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
