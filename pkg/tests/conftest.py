import numpy as np
import pytest

from bohmsim import IntegratorConfig, presets


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture
def system_a():
    return presets.system_a()


@pytest.fixture
def qubit_max():
    return presets.qubit()


@pytest.fixture
def cfg():
    return IntegratorConfig()
