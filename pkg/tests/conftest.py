import numpy as np
import pytest

from degenop.quadrature import build_graded_mesh

# Clamped-beam wavenumbers: roots of cos k cosh k = 1, bracketed near 3pi/2 and 5pi/2
# and refined with mpmath at 30 digits.
BEAM_K1 = 4.730040744862704
BEAM_K2 = 7.853204624095838
BEAM_LAMBDA1 = 500.563901740432596
BEAM_LAMBDA2 = 3803.537080497866


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def uniform_scheme():
    return build_graded_mesh(None, 0.0, 16, 16)
