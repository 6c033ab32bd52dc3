"""
Shared fixtures for the conewave tests.
"""

import pytest

from conewave.cross_section import build_dipole_sphere, build_flat_sphere
from conewave.geometry import build_geometry


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long end-to-end runs (deselect with -m 'not slow')")


@pytest.fixture(autouse=True)
def _no_plan_cache(monkeypatch):
    monkeypatch.delenv("CONEWAVE_PLAN_CACHE", raising=False)
    monkeypatch.delenv("CONEWAVE_THREADS", raising=False)


@pytest.fixture(scope="session")
def flat_sphere():
    return build_flat_sphere(3, 2)


@pytest.fixture
def flat_geometry(flat_sphere):
    return build_geometry(flat_sphere, 20.0, 64)


@pytest.fixture
def radial_geometry():
    return build_geometry(build_flat_sphere(3, 0), 20.0, 64)


@pytest.fixture(scope="session")
def dipole_sphere():
    return build_dipole_sphere(0.25, 8)
