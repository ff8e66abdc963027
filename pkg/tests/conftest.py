import numpy as np
import pytest

from homog_nd import analytic, cell
from homog_nd.fields import torus_nodes


@pytest.fixture(scope="session")
def cbad():
    return analytic.builtin_cbad()


@pytest.fixture(scope="session")
def cgood():
    return analytic.builtin_cgood()


@pytest.fixture(scope="session")
def cbad_cell128(cbad):
    return cell.solve_cell(cbad.spec, 128)


@pytest.fixture(scope="session")
def cgood_cell128(cgood):
    return cell.solve_cell(cgood.spec, 128)


@pytest.fixture
def grid64():
    return torus_nodes(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
