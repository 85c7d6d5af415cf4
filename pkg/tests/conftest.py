import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def qubit_pi8():
    th = np.pi / 8
    return np.array([np.cos(th), np.sin(th)], dtype=complex)
