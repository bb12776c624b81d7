import numpy as np
import pytest

from onebitsim.pulses import build_channel, make_pulse
from onebitsim.sources import ask


@pytest.fixture(scope="session")
def alphabet():
    return ask(4)


@pytest.fixture(scope="session")
def rect3():
    return make_pulse("rect", 3)


@pytest.fixture(scope="session")
def channel0(rect3):
    return build_channel(rect3, rect3, memory=1, noise_variance=0.0)


@pytest.fixture(scope="session")
def channel10(rect3):
    return build_channel(rect3, rect3, memory=1, noise_variance=0.1)


@pytest.fixture(scope="session")
def levels(alphabet):
    return np.asarray(alphabet.levels)
