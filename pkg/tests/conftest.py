import math

import numpy as np
import pytest

from models.operator import DensityState, DissipationChannel, Operator
from models.propagation import IntegrationMethod, IntegratorConfig
from models.reset import DispersiveModel


def _hermitian(rng, dim, scale=1.0):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (x + x.conj().T) / (2.0 * math.sqrt(dim))


def _density(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_hermitian():
    def make(rng, dim, scale=1.0):
        return Operator(_hermitian(rng, dim, scale), hermitian=True)
    return make


@pytest.fixture
def make_density():
    def make(rng, dim):
        return DensityState(_density(rng, dim))
    return make


@pytest.fixture
def make_channels():
    def make(rng, dim, count=2, rate=0.5):
        channels = []
        for _ in range(count):
            collapse = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / dim
            channels.append(DissipationChannel(rate, Operator(collapse)))
        return tuple(channels)
    return make


@pytest.fixture
def tight_integrator():
    return IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)


@pytest.fixture
def smooth_integrator():
    # fixed steps keep Φ smooth in the controls for finite differences
    return IntegratorConfig(method=IntegrationMethod.RK4, fixed_substeps=20)


@pytest.fixture
def reference_model():
    """χ = 2π·1.3 MHz, K = −2π·2.1 kHz, κ = 2π·1.1 MHz, small Fock space."""
    return DispersiveModel(chi=2 * math.pi * 1.3e-3, kerr=-2 * math.pi * 2.1e-6, kappa=2 * math.pi * 1.1e-3,
                           fock_dim=14)


@pytest.fixture
def linear_model():
    return DispersiveModel(chi=2 * math.pi * 1.3e-3, kerr=0.0, kappa=2 * math.pi * 1.1e-3, fock_dim=14)
