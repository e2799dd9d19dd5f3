"""Shared fixtures: small scenes on the round sphere and their flow data."""
import numpy as np
import pytest

from data.data_service import DataService
from geometry.flow import named_flow_curves
from geometry.scene import ODESettings, SurfaceScene
from geometry.sphere_lab import classify_moduli

random_seed = 44

# coarse step keeps the flow tests fast; curves still resolve to ~1e-5
TEST_ODE = ODESettings(step=0.01)


@pytest.fixture(scope="session")
def quadratic_scene():
    return SurfaceScene.quadratic((32, 64), TEST_ODE)


@pytest.fixture(scope="session")
def quadratic_decomp(quadratic_scene):
    return classify_moduli(quadratic_scene, threads=1)


@pytest.fixture(scope="session")
def quadratic_curves(quadratic_scene):
    return named_flow_curves(quadratic_scene)


@pytest.fixture(scope="session")
def fine_decomp():
    return classify_moduli(SurfaceScene.quadratic((96, 192), TEST_ODE), threads=1, companion=False)


@pytest.fixture(scope="session")
def height_scene():
    return SurfaceScene.height((32, 64), TEST_ODE)


@pytest.fixture
def rng():
    return np.random.default_rng(random_seed)


@pytest.fixture
def test_data():
    return DataService(test_mode=True)
