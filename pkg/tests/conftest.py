import numpy as np
import pytest

from segreg.core.model import Dataset, DetectorConfig
from segreg.simulation.models import CovarianceSpec, two_segment_model
from segreg.simulation.sampler import sample_dataset


def random_dataset(seed: int, n: int = 12, p: int = 2, shift: float = 2.0) -> Dataset:
    """Small ordered sample with a coefficient change half way."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = np.zeros((n, p))
    beta[: n // 2, 0] = shift
    beta[n // 2 :, -1] = -shift
    y = np.einsum("ij,ij->i", x, beta) + 0.3 * rng.standard_normal(n)
    return Dataset(y=y, x=x)


@pytest.fixture
def make_dataset():
    return random_dataset


@pytest.fixture
def small_data():
    return random_dataset(0)


@pytest.fixture
def small_config():
    return DetectorConfig(lam=0.1, gamma=0.05, delta=0.25)


@pytest.fixture
def two_segment_truth():
    return two_segment_model(6, CovarianceSpec(), sigma=0.5)


@pytest.fixture
def two_segment_data(two_segment_truth):
    return sample_dataset(two_segment_truth, 60, seed=0)
