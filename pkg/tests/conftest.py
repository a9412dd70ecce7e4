
import numpy as np
import pytest

from umblt.grid import DirectionSet, Grid2D, ScalarField
from umblt.medium import OpticalMedium

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("filterwarnings", "ignore::umblt.errors.WellPosednessWarning")
    config.addinivalue_line("filterwarnings", "ignore::umblt.errors.RankDeficiencyWarning")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)


@pytest.fixture
def dirs8():
    return DirectionSet(8)


@pytest.fixture
def small_grid():
    return Grid2D.square(21)


def hg_medium(grid, sigma=1.0, g=0.5, M=8):
    s = sigma if isinstance(sigma, ScalarField) else ScalarField.constant(grid, sigma)
    return OpticalMedium.henyey_greenstein(s, DirectionSet(M), g)


def vacuum_medium(grid, sigma=0.0, M=8):
    return OpticalMedium.non_scattering(ScalarField.constant(grid, sigma), DirectionSet(M))


def backward_distance(grid, directions):
    """Distance from each node back along each direction to the boundary."""
    X1, X2 = grid.mesh()
    out = np.empty((directions.M,) + grid.shape)
    for i, (c, s) in enumerate(zip(directions.cos, directions.sin)):
        t = np.full(grid.shape, np.inf)
        if c > 0:
            t = np.minimum(t, (X1 - grid.x1_min) / c)
        if c < 0:
            t = np.minimum(t, (X1 - grid.x1_max) / c)
        if s > 0:
            t = np.minimum(t, (X2 - grid.x2_min) / s)
        if s < 0:
            t = np.minimum(t, (X2 - grid.x2_max) / s)
        out[i] = t
    return out


def characteristic_solution(grid, directions, sigma, source, n=400):
    """``int_0^tau exp(-sigma t) S(x - t theta) dt`` by Gauss-Legendre quadrature."""
    xg, wg = np.polynomial.legendre.leggauss(n)
    X1, X2 = grid.mesh()
    T = backward_distance(grid, directions)
    out = np.empty_like(T)
    for i, (c, s) in enumerate(zip(directions.cos, directions.sin)):
        t = 0.5 * T[i][..., None] * (xg + 1.0)
        w = 0.5 * T[i][..., None] * wg
        out[i] = np.sum(w * np.exp(-sigma * t) * source(X1[..., None] - t * c, X2[..., None] - t * s), axis=-1)
    return out
