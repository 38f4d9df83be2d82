import numpy as np
import pytest

from ecopt import data, problem


@pytest.fixture
def small_obj():
    """4 workers x 10 samples in d=8, moderately regularized."""
    shards, _ = data.synth_logreg(4, 10, 8, seed=3, separation=5)
    return problem.LogRegObjective(shards, 0.1)


@pytest.fixture
def tiny_obj():
    """2 workers x 2 samples in d=2 for exact enumeration tests."""
    shards, _ = data.synth_logreg(2, 2, 2, seed=11, separation=np.inf)
    return problem.LogRegObjective(shards, 0.05)


def make_objective(n, m, d, seed, l2, separation=5.0):
    shards, _ = data.synth_logreg(n, m, d, seed=seed, separation=separation)
    return problem.LogRegObjective(shards, l2)
