import math

import numpy as np
import pytest

import spinbus as sb


@pytest.fixture(scope="session")
def flat100():
    """Flat 100 ueV landscape centered on the origin."""
    return sb.flat_landscape(splitting=0.1)


@pytest.fixture(scope="session")
def flat_zero():
    """Degenerate-valley landscape (no valley dynamics)."""
    return sb.flat_landscape(splitting=0.0)


@pytest.fixture
def p_default():
    return sb.SimParams()


@pytest.fixture
def p_unitary():
    """No dissipation, no spin-valley coupling."""
    return sb.SimParams(T1_v=math.inf, T2_s=math.inf, kappa_z=0.0)


@pytest.fixture
def p_coarse():
    """Coarse-step unitary parameters for fast tests."""
    return sb.SimParams(T1_v=math.inf, T2_s=math.inf, kappa_z=0.0, dt=2e-3)


def random_density_matrix(rng, dim=4):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
