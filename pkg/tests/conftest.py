import numpy as np
import pytest
from hypothesis import settings

from barrierpoint.synthgen import WorkloadSpec, generate

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def clean_workload():
    """5 phases, 200 regions, 4 threads, no counter noise."""
    return generate(WorkloadSpec(n_regions=200, noise=0.0, runs=3, seed=1))


@pytest.fixture(scope="session")
def noisy_workload():
    return generate(WorkloadSpec(n_regions=200, noise=0.01, runs=10, seed=2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
