import numpy as np
import pytest

from hornlab import (dirichlet_eigenvalues, make_caloric_series,
                     make_horn_params, profile_from_k2)


@pytest.fixture(scope="session")
def p_default():
    return make_horn_params(3, 4.0, 0.5, 0.25)


@pytest.fixture(scope="session")
def profile_i1_mu1(p_default):
    return profile_from_k2(p_default, 1, 1.0, 0.015, n_grid=64)


@pytest.fixture(scope="session")
def profile_i1_mu0(p_default):
    return profile_from_k2(p_default, 1, 0.0, 0.015, n_grid=64)


@pytest.fixture(scope="session")
def pairs8_rout2(p_default):
    return dirichlet_eigenvalues(p_default, 1, 2.0, 8)


@pytest.fixture(scope="session")
def pairs12_rout16(p_default):
    return dirichlet_eigenvalues(p_default, 1, 1.6, 12)


@pytest.fixture(scope="session")
def series4(p_default, pairs8_rout2):
    return make_caloric_series(pairs8_rout2[:4], [1.0, 0.7, 0.5, 0.35],
                               t_min=0.25)


@pytest.fixture(scope="session")
def series2(p_default, pairs8_rout2):
    return make_caloric_series(pairs8_rout2[:2], [1.0, 0.7], t_min=0.25)
