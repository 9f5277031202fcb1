import numpy as np
import pytest

from shibafid import LatticeConfig, ModelParams
from shibafid.verify import fixed_gap_solution


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_lattice():
    return LatticeConfig(2, 2)


@pytest.fixture
def fixed_gap_case(small_lattice):
    """A generic fixed-gap 2x2 problem with every coupling switched on."""
    params = ModelParams(
        t=1.0, eps_f=-0.7, g=1.0, omega_d=8.0, j_coupling=0.9, phi=0.8, impurity_site=0
    )
    gap = np.array([0.4, 0.55, 0.3, 0.45])
    solution = fixed_gap_solution(params, small_lattice, gap)
    return small_lattice, params, gap, solution


def random_state(rng, dim):
    """Random full-rank density matrix (Ginibre construction)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
