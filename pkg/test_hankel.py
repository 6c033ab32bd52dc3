"""
Discrete Hankel plans: grids, unitarity, accuracy and the on-disk cache.
"""

import math

import numpy as np
import pytest

from conewave.errors import DomainError, LengthMismatch
from conewave.hankel import PlanCache, hankel_forward, hankel_inverse, plan_dht


def test_half_order_grid_is_uniform():
    size = 32
    plan = plan_dht(0.5, 3, math.pi, size)
    k = np.arange(1, size + 1)
    np.testing.assert_allclose(plan.radii, k * math.pi / (size + 1), rtol=1e-12)
    np.testing.assert_allclose(plan.frequencies, k, rtol=1e-12)
    assert plan.kernel_defect < 1e-12


def test_polar_factor_is_orthogonal():
    plan = plan_dht(1.5, 3, 20.0, 96)
    np.testing.assert_allclose(plan.kernel @ plan.kernel, np.eye(96), atol=1e-12)
    np.testing.assert_allclose(plan.kernel, plan.kernel.T, atol=1e-13)


def test_forward_inverse_and_plancherel():
    rng = np.random.default_rng(7)
    plan = plan_dht(2.3, 3, 15.0, 80)
    samples = rng.standard_normal(80) + 1j * rng.standard_normal(80)
    spectral = hankel_forward(plan, samples)
    np.testing.assert_allclose(hankel_inverse(plan, spectral), samples, atol=1e-11)
    assert plan.l2_norm(spectral, spectral=True) == pytest.approx(plan.l2_norm(samples, spectral=False), rel=1e-12)


@pytest.mark.parametrize("nu", [0.5, 0.4564, 1.5, 2.5, 3.5])
def test_involution_and_plancherel_at_production_size(nu):
    size = 512
    plan = plan_dht(nu, 3, 20.0, size)
    assert np.max(np.abs(plan.kernel @ plan.kernel - np.eye(size))) <= 1e-8
    rng = np.random.default_rng(7)
    samples = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    spectral = hankel_forward(plan, samples)
    np.testing.assert_allclose(hankel_inverse(plan, spectral), samples, rtol=0.0, atol=1e-8)
    assert plan.l2_norm(spectral, spectral=True) == pytest.approx(plan.l2_norm(samples, spectral=False), rel=1e-10)


def test_gaussian_is_self_dual():
    plan = plan_dht(0.5, 3, 20.0, 128)
    spectral = plan.forward(np.exp(-plan.radii ** 2 / 2.0))
    np.testing.assert_allclose(spectral, np.exp(-plan.frequencies ** 2 / 2.0), atol=1e-7)
    assert plan.band_limited(spectral)


def test_diagonalizes_the_radial_operator():
    nu, r_max, size = 1.5, 20.0, 128
    lam = nu * nu - 0.25
    plan = plan_dht(nu, 3, r_max, size)
    r = plan.radii
    f = np.exp(-(r - 5.0) ** 2)
    df = -2.0 * (r - 5.0) * f
    d2f = (4.0 * (r - 5.0) ** 2 - 2.0) * f
    expected = -d2f - 2.0 * df / r + lam * f / r ** 2
    computed = plan.inverse(plan.frequencies ** 2 * plan.forward(f))
    assert np.max(np.abs(computed - expected)) < 1e-4 * np.max(np.abs(expected))


def test_interpolation_is_exact_at_nodes():
    plan = plan_dht(0.8, 3, 10.0, 48)
    values = np.exp(-plan.radii ** 2) * plan.radii ** 0.3
    np.testing.assert_allclose(plan.interpolate(values, plan.radii), values, atol=1e-10)
    between = 0.5 * (plan.radii[10] + plan.radii[11])
    off = plan.interpolate(values, np.array([between]))
    assert off[0] == pytest.approx(math.exp(-between ** 2) * between ** 0.3, abs=1e-6)


def test_length_mismatch():
    plan = plan_dht(0.5, 3, 10.0, 16)
    with pytest.raises(LengthMismatch):
        plan.forward(np.ones(15))
    with pytest.raises(LengthMismatch):
        plan.inverse(np.ones(17))


@pytest.mark.parametrize(
    "order, dimension, r_max, size",
    [(0.0, 3, 10.0, 16), (0.5, 1, 10.0, 16), (0.5, 3, -1.0, 16), (0.5, 3, 10.0, 1)],
)
def test_invalid_plans(order, dimension, r_max, size):
    with pytest.raises(DomainError):
        plan_dht(order, dimension, r_max, size)


def test_cache_reload_is_bit_identical(tmp_path):
    cache = PlanCache(tmp_path)
    first = cache.get(1.5, 3, 12.0, 40)
    assert cache.path_for(1.5, 3, 12.0, 40).exists()
    second = PlanCache(tmp_path).get(1.5, 3, 12.0, 40)
    for name in PlanCache._FIELDS:
        assert np.array_equal(getattr(first, name), getattr(second, name))
    assert second.kernel_defect == first.kernel_defect


def test_cache_from_env(tmp_path, monkeypatch):
    assert PlanCache.from_env() is None
    monkeypatch.setenv("CONEWAVE_PLAN_CACHE", str(tmp_path / "plans"))
    cache = PlanCache.from_env()
    assert cache is not None and cache.directory.is_dir()
