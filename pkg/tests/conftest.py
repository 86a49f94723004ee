import numpy as np
import pytest

from qafusion.fusion import FusionConfig
from qafusion.sensor_models import ClassicalSensorConfig, QuantumSensorConfig

# lambda / (2 T^2) for 780 nm and T = 1 ms, i.e. one fringe in m/s^2
FRINGE = 0.39


@pytest.fixture
def qcfg():
    return QuantumSensorConfig()


@pytest.fixture
def fcfg():
    return FusionConfig()


@pytest.fixture
def quiet_classical():
    return ClassicalSensorConfig(
        constant_bias=0.0, sigma_white=0.0, sigma_bias_offset=0.0, sigma_bias_drift=0.0
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20201016)
