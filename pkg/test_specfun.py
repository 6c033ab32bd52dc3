"""
Bessel functions, zeros and regime envelopes against closed forms and an
mpmath oracle.
"""

import math

import mpmath
import numpy as np
import pytest

from conewave.errors import DomainError
from conewave.specfun import (
    BesselRegime,
    bessel_envelope,
    bessel_i,
    bessel_j,
    bessel_j_zeros,
    bessel_k,
    bessel_regime_bounds,
    bessel_square_mass,
    bessel_y,
    evaluate_j,
    wronskian_ik,
    wronskian_jy,
)
from conewave.witnesses import BESSEL_SQUARE_MASS_BOUND

mpmath.mp.dps = 30


def test_half_integer_closed_forms():
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2.0 / math.pi, rel=1e-12)
    assert bessel_y(0.5, math.pi) == pytest.approx(math.sqrt(2.0) / math.pi, rel=1e-12)
    assert abs(bessel_y(0.5, math.pi / 2)) < 1e-15
    assert bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2.0 / math.pi) * math.sinh(1.0), rel=1e-12)
    assert bessel_k(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2.0) * math.exp(-1.0), rel=1e-12)


def test_small_argument_limit():
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(0.0, 1e-12) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "nu, x",
    [(1.0, 1.0), (0.0, 1.0), (0.3, 2.7), (2.5, 10.0), (7.25, 3.0), (20.0, 35.0), (50.0, 300.0)],
)
def test_against_mpmath(nu, x):
    assert bessel_j(nu, x) == pytest.approx(float(mpmath.besselj(nu, x)), rel=1e-10, abs=1e-300)
    assert bessel_y(nu, x) == pytest.approx(float(mpmath.bessely(nu, x)), rel=1e-10)
    assert bessel_i(nu, x) == pytest.approx(float(mpmath.besseli(nu, x)), rel=1e-10)
    assert bessel_k(nu, x) == pytest.approx(float(mpmath.besselk(nu, x)), rel=1e-10)


def test_reference_values():
    assert bessel_j(1.0, 1.0) == pytest.approx(0.4400505857, abs=1e-10)
    assert bessel_y(0.0, 1.0) == pytest.approx(0.0882569642, abs=1e-10)


def test_wronskians_on_log_grid():
    for nu in np.linspace(0.0, 50.0, 11):
        x = np.geomspace(max(1e-3, nu / 4.0 + 1e-3), 1e4, 25)
        assert np.max(wronskian_jy(nu, x)) < 1e-10
    assert wronskian_ik(0.7, 2.3) < 1e-12


def test_evaluate_j_reports_error_estimate():
    result = evaluate_j(2.0, 3.0)
    assert result.value == pytest.approx(float(mpmath.besselj(2, 3)), rel=1e-13)
    assert 0.0 < result.relative_error_estimate < 1e-10


def test_recurrence_by_central_difference():
    nu, x, h = 1.3, 2.2, 1e-5
    g = lambda t: t ** (-nu) * bessel_j(nu, t)
    derivative = (g(x + h) - g(x - h)) / (2.0 * h)
    assert derivative == pytest.approx(-(x ** (-nu)) * bessel_j(nu + 1.0, x), rel=1e-8)


def test_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(-1.0, 1.0)
    with pytest.raises(DomainError):
        bessel_j(250.0, 1.0)
    with pytest.raises(DomainError):
        bessel_y(1.0, 0.0)
    with pytest.raises(DomainError):
        bessel_j(1.0, float("nan"))
    with pytest.raises(DomainError):
        bessel_j_zeros(1.0, 0)


def test_zeros_of_half_order_are_multiples_of_pi():
    table = bessel_j_zeros(0.5, 3)
    assert len(table) == 3
    np.testing.assert_allclose(table.zeros, [math.pi, 2 * math.pi, 3 * math.pi], rtol=1e-13)


def test_zeros_order_zero():
    zeros = bessel_j_zeros(0.0, 2).zeros
    assert zeros[0] == pytest.approx(2.4048255577, abs=1e-10)
    assert zeros[1] > zeros[0] + 2.0


def test_zeros_are_sign_changes():
    nu = 3.7
    zeros = bessel_j_zeros(nu, 200).zeros
    assert np.all(np.diff(zeros) > 3.0)
    envelope = np.sqrt(2.0 / (math.pi * zeros))
    assert np.max(np.abs(bessel_j(nu, zeros)) / envelope) < 1e-11
    assert zeros[0] == pytest.approx(float(mpmath.besseljzero(nu, 1)), rel=1e-13)


def test_regime_bounds():
    small = bessel_regime_bounds(10.0, 4.0)
    assert small.regime is BesselRegime.SMALL and small.holds
    transition = bessel_regime_bounds(10.0, 10.0)
    assert transition.regime is BesselRegime.TRANSITION
    assert abs(transition.value) <= 10.0 ** (-1.0 / 3.0)
    oscillatory = bessel_regime_bounds(10.0, 40.0)
    assert oscillatory.regime is BesselRegime.OSCILLATORY
    assert abs(oscillatory.value) <= 40.0 ** -0.5
    with pytest.raises(DomainError):
        bessel_regime_bounds(1.0, 1.0)


def test_envelope_scan_holds():
    for nu in np.linspace(2.0, 40.0, 20):
        for x in np.geomspace(0.05, 150.0, 60):
            assert abs(bessel_j(nu, x)) <= bessel_envelope(nu, x)


def test_square_mass_uniform_bound():
    for nu in (0.0, 0.5, 5.0, 20.0):
        for radius in (0.1, 1.0, 10.0, 100.0):
            assert bessel_square_mass(nu, radius) <= BESSEL_SQUARE_MASS_BOUND
    large = bessel_square_mass(0.5, 400.0)
    assert large == pytest.approx(math.log(2.0) / math.pi, rel=0.02)
