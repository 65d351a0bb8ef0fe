import numpy as np
import pytest

from edgelift import HopfOscillatorParams, NetworkSystem, make_hopf_oscillator
from edgelift.graph import path_graph

X0_PHASES = np.array([1.0, 0.0, 1.0, 0.5, 1.0, 1.0])


def hopf_path(actuation: str, n: int = 3, omega: float = 1.0) -> NetworkSystem:
    model = make_hopf_oscillator(HopfOscillatorParams(omega, actuation))
    return NetworkSystem(path_graph(n), [model] * n)


@pytest.fixture
def case_a():
    return hopf_path("full")


@pytest.fixture
def case_b():
    return hopf_path("radial_only")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
