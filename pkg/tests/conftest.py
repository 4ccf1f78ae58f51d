import numpy as np
import pytest

from pefem.geometry import Disk, Ellipse, Star
from pefem.mesh import mesh_sequence

# coarse boundary resolution and level count shared by the rate studies
DISK_N0 = 8
DISK_LEVELS = 7


@pytest.fixture(scope="session")
def disk():
    return Disk()


@pytest.fixture(scope="session")
def ellipse():
    return Ellipse()


@pytest.fixture(scope="session")
def star():
    return Star()


@pytest.fixture(scope="session")
def disk_meshes(disk):
    """Disk meshes of levels 0..6 from an 8-gon."""
    return mesh_sequence(disk, DISK_N0, DISK_LEVELS)


@pytest.fixture(scope="session")
def ellipse_meshes(ellipse):
    return mesh_sequence(ellipse, DISK_N0, DISK_LEVELS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
