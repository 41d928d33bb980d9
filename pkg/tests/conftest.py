"""Shared, session-scoped fixtures for the expensive builds."""

import numpy as np
import pytest

from cmap import geometry as geo
from cmap.harmonic import annulus_solution
from cmap.relax import build_system, run_relaxation, valid_probes

DISC = geo.DomainSpec.disc()
SQUARE = geo.square()


@pytest.fixture(scope="session")
def disc():
    return DISC


@pytest.fixture(scope="session")
def square():
    return SQUARE


@pytest.fixture(scope="session")
def disc_system_n4():
    return build_system(DISC, 0j, 4)


@pytest.fixture(scope="session")
def disc_run_n4(disc_system_n4):
    """Default-length run on Disc(0, 0.6), z0 = 0, n = 4, with per-round history at 100 probes."""
    probes = valid_probes(disc_system_n4.pdomain, 100, seed=1)
    return run_relaxation(disc_system_n4, probes=probes, record=True)


@pytest.fixture(scope="session")
def square_system_n4():
    return build_system(SQUARE, 0j, 4)


@pytest.fixture(scope="session")
def square_field_n4(square_system_n4):
    return run_relaxation(square_system_n4, probes=np.zeros(0, dtype=complex)).field


def disc_exact(z, n=4):
    return annulus_solution(0j, np.exp(-2 * n), 0.6, z)


@pytest.fixture(scope="session")
def disc_map_n5():
    from cmap.riemann import build_map
    return build_map(DISC, 0j, 5)


@pytest.fixture(scope="session")
def disc_map_shift_n5():
    from cmap.riemann import build_map
    return build_map(DISC, 0.2 + 0j, 5)


@pytest.fixture(scope="session")
def square_map_n4():
    from cmap.riemann import build_map
    return build_map(SQUARE, 0j, 4)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
