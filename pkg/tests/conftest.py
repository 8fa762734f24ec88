import numpy as np
import pytest

from neckglue import Dimension, ParameterBudget, build_basis, integrate_orbit


@pytest.fixture(scope="session")
def dim4():
    return Dimension(4)


@pytest.fixture(scope="session")
def budget4(dim4):
    return ParameterBudget.defaults(dim4)


@pytest.fixture(scope="session")
def orbit_cache():
    cache = {}

    def get(n, eps):
        key = (n, eps)
        if key not in cache:
            cache[key] = integrate_orbit(Dimension(n), eps)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def orbit4_03(orbit_cache):
    return orbit_cache(4, 0.3)


@pytest.fixture(scope="session")
def orbit4_01(orbit_cache):
    return orbit_cache(4, 0.1)


@pytest.fixture(scope="session")
def basis4(dim4):
    return build_basis(dim4, 4)


@pytest.fixture(scope="session")
def annulus_points():
    """Deterministic points with radii in [0.3, 0.9], away from the puncture."""
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(40, 4))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return pts * np.linspace(0.3, 0.9, 40)[:, None]
