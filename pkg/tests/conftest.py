import numpy as np
import pytest

from cli_runner import sine_fn
from osc_symbolic import seed


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def seed_family():
    """e^{-1/t} sin(t^-2), a família dos exemplos de Knapp e das somas diádicas"""
    return seed(1.0, 2.0)


@pytest.fixture
def unit_sine():
    """phi(t) = sin(2 pi t)"""
    return sine_fn(1.0)
