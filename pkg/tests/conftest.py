import numpy as np
import pytest

from mosattack.core import Dataset, SubjectParams


def make_dataset(ratings, truth, seed=0):
    ratings = np.asarray(ratings)
    n = ratings.shape[0]
    return Dataset(ratings, np.asarray(truth, dtype=float), SubjectParams(np.zeros(n), np.zeros(n)), seed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
