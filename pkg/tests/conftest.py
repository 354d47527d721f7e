import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rrcap import synthetic  # noqa: E402
from rrcap.pointcloud_io import PointCloud  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cube_corners():
    xyz = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    rgb = np.arange(24).reshape(8, 3) * 10
    return PointCloud(xyz, rgb)


@pytest.fixture(scope="session")
def small_cube():
    return synthetic.cube(4000, seed=5)


@pytest.fixture(scope="session")
def small_torus():
    return synthetic.torus(4000, seed=6)
