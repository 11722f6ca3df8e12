"""Shared fixtures: benchmark devices and reusable operating points."""
import numpy as np
import pytest

from chirpgates import presets


@pytest.fixture(scope="session")
def cz_device():
    return presets.cz_device()


@pytest.fixture(scope="session")
def always_on_device():
    return presets.always_on_device()


@pytest.fixture(scope="session")
def z_qubit():
    return presets.z_gate_qubit()


@pytest.fixture(scope="session")
def x_qubit():
    return presets.x_gate_qubit()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
