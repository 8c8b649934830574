import numpy as np
import pytest
from hypothesis import settings

from mppm_qkd.model import default_params

settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def defaults():
    return default_params()


def sigma_bound(p, n, k=5.0):
    """k-sigma binomial half-width for a frequency estimate."""
    return k * np.sqrt(p * (1.0 - p) / n)
