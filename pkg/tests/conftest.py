import math

import pytest

from stablesurf import surfaces


@pytest.fixture(scope="session")
def unit_sphere():
    return surfaces.generate("sphere", resolution=3).mesh


@pytest.fixture(scope="session")
def icosphere4():
    return surfaces.generate("sphere", resolution=4).mesh


@pytest.fixture(scope="session")
def flat_cylinder():
    # circumference 2*pi, height 3; medial line mid-cell at this level
    return surfaces.generate("flat_cylinder", resolution=5,
                             circumference=2 * math.pi, height=3.0).mesh


@pytest.fixture(scope="session")
def flat_annulus():
    return surfaces.generate("annulus", resolution=4).mesh


@pytest.fixture(scope="session")
def square_torus():
    return surfaces.generate("flat_torus", resolution=4).mesh


@pytest.fixture(scope="session")
def plane_disk():
    return surfaces.generate("plane_disk", resolution=4).mesh
