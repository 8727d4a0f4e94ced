import numpy as np
import pytest

import qse

QUBIT_ENERGIES = (0.0, 1.0)
LADDER_ENERGIES = (0.0, 1.0, 2.0, 3.0)
THETA_RANGE = (0.1, 10.0)
GRID_N = 200


@pytest.fixture(scope="session")
def desk_grid():
    return qse.make_log_grid(*THETA_RANGE, GRID_N)


@pytest.fixture(scope="session")
def desk_prior(desk_grid):
    return qse.log_flat_prior(desk_grid)


@pytest.fixture(scope="session")
def qubit_desk(desk_grid, desk_prior):
    """Thermal qubit working instance: levels {0, 1}, k_B = 1, theta_u = 1."""
    h = qse.HamiltonianSpec(energies=QUBIT_ENERGIES, k_B=1.0)
    family = qse.thermal_state_family(h, desk_grid)
    moments = qse.operator_moments(desk_prior, family, 1.0)
    strategy = qse.optimal_strategy(moments)
    report = qse.minimum_error(moments, strategy)
    return {
        "grid": desk_grid,
        "prior": desk_prior,
        "hamiltonian": h,
        "family": family,
        "moments": moments,
        "strategy": strategy,
        "report": report,
    }


@pytest.fixture(scope="session")
def ladder_desk(desk_grid, desk_prior):
    h = qse.HamiltonianSpec(energies=LADDER_ENERGIES, k_B=1.0)
    family = qse.thermal_state_family(h, desk_grid)
    moments = qse.operator_moments(desk_prior, family, 1.0)
    return {
        "grid": desk_grid,
        "prior": desk_prior,
        "hamiltonian": h,
        "family": family,
        "moments": moments,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
