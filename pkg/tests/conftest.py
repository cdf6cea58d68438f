import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def grid64():
    from oamtopo.optics import GridSpec

    return GridSpec(64, 3.0)


@pytest.fixture(scope="session")
def grid256():
    from oamtopo.optics import GridSpec

    return GridSpec(256, 4.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
