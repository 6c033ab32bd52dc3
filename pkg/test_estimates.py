"""
Estimate checks: dispersive decay, Strichartz, local smoothing, G-function,
Hardy, resolvent and uniform Sobolev quotients.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from conewave.cross_section import build_custom_spectrum, build_dipole_sphere, build_flat_sphere
from conewave.errors import (
    BetaOutOfRange,
    DomainError,
    FitUnstable,
    NonAdmissiblePair,
    POutOfRange,
    SigmaOnSpectrum,
    SOutOfRange,
)
from conewave.estimates import (
    check_admissible,
    check_beta,
    check_hardy,
    default_sigma_grid,
    dispersive_decay_scan,
    expected_decay_slope,
    distance_to_spectrum,
    ensemble_member,
    g_function_check,
    g_function_sweep,
    gaussian_test_field,
    hardy_p_window,
    hardy_quotient,
    hardy_ratio,
    local_smoothing_quotient,
    near_delta_field,
    random_ensemble,
    resolvent_kernel_crosscheck,
    resolvent_sup_scan,
    sigma_grid,
    smooth_cutoff,
    sobolev_quotient,
    strichartz_quotient,
    uniform_sobolev_probe,
    weighted_hardy_check,
    weighted_resolvent_norm,
)
from conewave.geometry import build_geometry


@pytest.fixture(scope="module")
def sobolev_geometry():
    return build_geometry(build_flat_sphere(3, 0), 40.0, 512)


# ---------------------------------------------------------------- ensembles


def test_ensemble_members_are_reproducible(flat_geometry):
    first = ensemble_member(flat_geometry, 3, seed=9)
    again = ensemble_member(flat_geometry, 3, seed=9)
    other = ensemble_member(flat_geometry, 4, seed=9)
    for a, b in zip(first.coefficients, again.coefficients):
        assert np.array_equal(a, b)
    assert (first - other).norm() > 0.0
    assert len(random_ensemble(flat_geometry, 5, seed=9)) == 5


def test_ensemble_member_survives_refinement(flat_geometry):
    coarse = ensemble_member(flat_geometry, 0, seed=1)
    fine = ensemble_member(flat_geometry.refined(2), 0, seed=1)
    assert fine.norm() == pytest.approx(coarse.norm(), rel=1e-6)


# ---------------------------------------------------------------- dispersive


def test_dispersive_scan_rejects_bad_times(radial_geometry):
    with pytest.raises(DomainError):
        dispersive_decay_scan(radial_geometry, times=[1.0, 2.0])
    with pytest.raises(DomainError):
        dispersive_decay_scan(radial_geometry, times=[0.5, 2.0, 3.0])


def test_near_delta_field_has_unit_l1_mass():
    geometry = build_geometry(build_flat_sphere(3, 0), 20.0, 128)
    field = near_delta_field(geometry, width=1.0)
    radial = field.to_radial().mode_row(0) / math.sqrt(4.0 * math.pi)
    expected = (2.0 * math.pi) ** -1.5 * np.exp(-geometry.plan(0).radii ** 2 / 2.0)
    np.testing.assert_allclose(radial.real, expected, atol=1e-8)


def test_two_scale_data_is_not_a_power_law():
    geometry = build_geometry(build_flat_sphere(3, 0), 200.0, 512)
    data = 100.0 * gaussian_test_field(geometry, 1.0) + gaussian_test_field(geometry, 30.0)
    with pytest.raises(FitUnstable):
        dispersive_decay_scan(geometry, data=data)


def test_expected_decay_slope():
    assert expected_decay_slope(3, 0.5) == pytest.approx(-1.5)
    assert expected_decay_slope(3, 0.3) == pytest.approx(-1.3)
    assert expected_decay_slope(3, 2.0) == pytest.approx(-1.5)
    assert expected_decay_slope(4, 0.6) == pytest.approx(-1.6)
    assert expected_decay_slope(2, 0.25) == pytest.approx(-1.0)


@pytest.mark.slow
def test_flat_cone_decays_like_t_to_minus_three_halves():
    geometry = build_geometry(build_flat_sphere(3, 0), 800.0, 2400)
    fit = dispersive_decay_scan(geometry, width=0.7)
    assert fit.slope == pytest.approx(-1.5, abs=0.02)
    assert fit.residual < 0.1


@pytest.mark.slow
def test_small_ground_order_decays_slower():
    geometry = build_geometry(build_custom_spectrum(3, [(-0.16, 1), (2.0, 3)]), 800.0, 2400)
    fit = dispersive_decay_scan(geometry, width=0.7)
    assert fit.slope == pytest.approx(expected_decay_slope(3, geometry.cross_section.nu0), abs=0.05)


# ---------------------------------------------------------------- Strichartz


@pytest.mark.parametrize("q, r, n", [(4.0, 3.0, 3), (2.0, 6.0, 3), (math.inf, 2.0, 3), (4.0, 4.0, 2), (2.0, 4.0, 4)])
def test_admissible_pairs(q, r, n):
    check_admissible(q, r, n)


@pytest.mark.parametrize("q, r, n", [(3.0, 3.0, 3), (1.0, 6.0, 3), (2.0, math.inf, 2), (4.0, 1.5, 3)])
def test_non_admissible_pairs(q, r, n):
    with pytest.raises(NonAdmissiblePair):
        check_admissible(q, r, n)


@pytest.mark.parametrize("cross_section", [build_flat_sphere(3, 2), build_dipole_sphere(0.5, 4)], ids=["flat", "dipole"])
def test_energy_pair_quotient_is_one(cross_section):
    geometry = build_geometry(cross_section, 20.0, 64)
    report = strichartz_quotient(geometry, math.inf, 2.0, 2.0, ensemble=3, seed=4, time_samples=8)
    assert report.sup_quotient == pytest.approx(1.0, abs=1e-10)
    assert report.sup_quotient_doubled == pytest.approx(1.0, abs=1e-10)
    assert report.pass_flag


def test_strichartz_report_shape(flat_geometry):
    report = strichartz_quotient(flat_geometry, 4.0, 3.0, 1.0, ensemble=3, seed=2, time_samples=16)
    assert report.ensemble_size == 3
    assert len(report.rows()) == 3
    assert all(math.isfinite(q) and q > 0.0 for q in report.quotients)
    assert report.summary()["params"] == {"q": 4.0, "r": 3.0, "T": 1.0, "n": 3}
    again = strichartz_quotient(flat_geometry, 4.0, 3.0, 1.0, ensemble=3, seed=2, time_samples=16)
    assert again.quotients == report.quotients


def test_strichartz_rejects_bad_pair(flat_geometry):
    with pytest.raises(NonAdmissiblePair):
        strichartz_quotient(flat_geometry, 3.0, 3.0, 1.0, ensemble=1)

@pytest.mark.slow
@pytest.mark.parametrize("q, r", [(2.0, 6.0), (4.0, 3.0)])
@pytest.mark.parametrize(
    "cross_section, r_max, nodes, ensemble",
    [(build_flat_sphere(3, 2), 256.0, 512, 5), (build_dipole_sphere(0.5, 4), 128.0, 192, 3)],
    ids=["flat", "dipole"],
)
def test_strichartz_quotient_is_stable_in_time(q, r, cross_section, r_max, nodes, ensemble):
    geometry = build_geometry(cross_section, r_max, nodes)
    report = strichartz_quotient(geometry, q, r, 8.0, ensemble=ensemble, seed=0)
    assert report.pass_flag


# ---------------------------------------------------------------- local smoothing


def test_beta_window(flat_geometry):
    check_beta(0.75, 0.5)
    for beta in (0.4, 0.5, 1.5, 1.6):
        with pytest.raises(BetaOutOfRange) as info:
            check_beta(beta, 0.5)
        assert info.value.window == (0.5, 1.5)
    with pytest.raises(BetaOutOfRange):
        local_smoothing_quotient(flat_geometry, 0.0, 0.5, 0.4, ensemble=1)
    with pytest.raises(DomainError):
        local_smoothing_quotient(flat_geometry, 0.0, 0.5, 0.75, weight="gaussian", ensemble=1)


def test_local_smoothing_variants(flat_geometry):
    power = local_smoothing_quotient(flat_geometry, 0.25, 0.5, 0.75, horizon=2.0, ensemble=2, time_samples=16)
    assert all(math.isfinite(q) and q > 0.0 for q in power.quotients)
    endpoint = local_smoothing_quotient(
        flat_geometry, 0.0, 0.5, 0.75, horizon=2.0, ensemble=2, time_samples=16, epsilon=0.1
    )
    assert endpoint.parameters["beta"] == pytest.approx(0.6)
    compact = local_smoothing_quotient(
        flat_geometry, 0.0, 0.5, 0.75, weight="compact", horizon=2.0, ensemble=2, time_samples=16
    )
    assert compact.parameters["weight"] == "compact"
    assert all(q >= 0.0 for q in compact.quotients)


def test_doubled_horizon_never_decreases_the_quotient(flat_geometry):
    report = local_smoothing_quotient(flat_geometry, 0.0, 0.5, 0.75, horizon=1.0, ensemble=2, time_samples=64)
    for base, doubled in zip(report.quotients, report.quotients_doubled):
        assert doubled >= base * (1.0 - 1e-3)


@pytest.mark.slow
@pytest.mark.parametrize(
    "s, beta, weight",
    [(0.0, 1.0, "power"), (0.5, 0.75, "compact")],
    ids=["power-beta-1", "compact"],
)
def test_local_smoothing_is_stable_under_horizon_doubling(s, beta, weight):
    geometry = build_geometry(build_flat_sphere(3, 2), 256.0, 512)
    report = local_smoothing_quotient(geometry, 0.0, s, beta, weight=weight, horizon=8.0, ensemble=5, seed=0)
    assert report.pass_flag
    assert max(report.quotients_doubled) <= 1.05 * max(report.quotients)
    assert report.sup_quotient > 0.0


# ---------------------------------------------------------------- G-function


def test_g_function_vanishes_for_zero_profile():
    sample = g_function_check(1.0, 2.0, 1.0, profile=lambda rho: np.zeros_like(rho))
    assert sample.g_value == 0.0
    assert sample.ratio == 0.0


def test_g_function_branches():
    assert g_function_check(0.5, 0.5, 1.0).branch == "small"
    assert g_function_check(0.5, 4.0, 1.0).branch == "large"
    with pytest.raises(DomainError):
        g_function_check(0.0, 1.0, 1.0)


def test_g_function_sweep_holds():
    samples = g_function_sweep()
    assert len(samples) == 125
    assert all(s.holds for s in samples)
    assert max(s.ratio for s in samples) <= 1.0


def test_g_function_large_radius_matches_oscillation_average():
    # J_{1/2}(x)^2 = 2 sin(x)^2 / (pi x) averages to 1 / (pi x)
    sample = g_function_check(0.5, 32.0, 1.0, rho_nodes=160)
    x, w = np.polynomial.legendre.leggauss(160)
    rho = 1.5 + 0.5 * x
    amplitude = smooth_cutoff(rho) ** 2
    expected = float(np.sum(0.5 * w * amplitude / rho ** 2)) / (2.0 * math.pi * 32.0)
    assert sample.g_value == pytest.approx(expected, rel=0.05)


# ---------------------------------------------------------------- Hardy


def test_hardy_window():
    lower, upper = hardy_p_window(0.5, 0.5, 3)
    assert lower == pytest.approx(1.0)
    assert upper == pytest.approx(6.0)
    check_hardy(0.5, 2.0, 0.5, 3)
    with pytest.raises(SOutOfRange):
        check_hardy(1.6, 2.0, 0.5, 3)
    with pytest.raises(POutOfRange):
        check_hardy(0.5, 1.0, 0.5, 3)
    with pytest.raises(POutOfRange):
        check_hardy(0.5, 7.0, 0.5, 3)


def test_hardy_ratio_respects_sharp_constant(flat_geometry):
    for index in range(3):
        ratio = hardy_ratio(ensemble_member(flat_geometry, index, seed=0), 1.0)
        assert 0.0 < ratio <= 2.0 * 1.01


def test_hardy_quotient_report(flat_geometry):
    report = hardy_quotient(flat_geometry, 0.5, ensemble=3)
    assert report.estimate == "hardy"
    assert report.parameters["mode"] == "certified"
    assert len(report.quotients_doubled) == 3
    experimental = hardy_quotient(flat_geometry, 0.5, p=3.0, ensemble=2)
    assert experimental.parameters["mode"] == "experimental"
    assert all(math.isfinite(q) for q in experimental.quotients)


def test_weighted_hardy_closed_forms():
    g = lambda r: r * math.exp(-r)
    assert weighted_hardy_check(0.0, g, lambda r: (1.0 - r) * math.exp(-r)).ratio == pytest.approx(2.0, abs=1e-8)
    for a in (0.6, 0.55):
        result = weighted_hardy_check(
            0.0,
            lambda r, a=a: r ** a * math.exp(-r),
            lambda r, a=a: (a / r - 1.0) * r ** a * math.exp(-r),
        )
        assert result.ratio == pytest.approx(2.0 / a, rel=1e-5)
        assert result.holds


def test_weighted_hardy_with_numeric_derivative():
    result = weighted_hardy_check(1.0, lambda r: r * math.exp(-r))
    assert result.holds
    with pytest.raises(DomainError):
        weighted_hardy_check(-1.0, lambda r: r)


# ---------------------------------------------------------------- resolvent


def test_sigma_grid_avoids_the_spectrum():
    grid = default_sigma_grid()
    assert len(grid) == 35
    assert min(distance_to_spectrum(s) for s in grid) > 1e-3
    assert sigma_grid([1.0], 1) == [pytest.approx(-1.0 + 0j)]


def test_weighted_resolvent_norm(flat_geometry):
    value = weighted_resolvent_norm(flat_geometry, -1.0 + 0.5j, 0)
    assert math.isfinite(value) and value > 0.0
    with pytest.raises(SigmaOnSpectrum):
        weighted_resolvent_norm(flat_geometry, 2.0, 0)


def test_resolvent_scan(flat_geometry):
    report = resolvent_sup_scan(flat_geometry, sigmas=[-1.0, 1.0j, -0.5 - 0.5j], max_groups=2)
    assert report.ensemble_size == 3
    assert report.sup_quotient == max(report.quotients)
    with pytest.raises(SigmaOnSpectrum):
        resolvent_sup_scan(flat_geometry, sigmas=[3.0])


def test_resolvent_spectral_solve_matches_green_function():
    geometry = build_geometry(build_flat_sphere(3, 0), 20.0, 256)
    spectral, quadrature = resolvent_kernel_crosscheck(geometry, 1.0, lambda r: np.exp(-(r - 5.0) ** 2))
    assert spectral == pytest.approx(quadrature, rel=0.01)


# ---------------------------------------------------------------- uniform Sobolev


def _yukawa_quotient(width: float) -> float:
    def potential(r):
        integrand = lambda s: s * math.exp(-0.5 * (s / width) ** 2) * (math.exp(-abs(r - s)) - math.exp(-(r + s)))
        head, _ = integrate.quad(integrand, 0.0, r, limit=200)
        tail, _ = integrate.quad(integrand, r, r + 12.0 * width, limit=200)
        return (head + tail) / (2.0 * r)

    l6, _ = integrate.quad(lambda r: potential(r) ** 6 * r * r, 1e-9, 40.0, limit=200)
    denominator = (4.0 * math.pi * 0.25 * math.sqrt(math.pi) * (5.0 / 3.0 * width * width) ** 1.5) ** (5.0 / 6.0)
    return (4.0 * math.pi * l6) ** (1.0 / 6.0) / denominator


def test_sobolev_quotient_matches_yukawa_potential(sobolev_geometry):
    value = sobolev_quotient(gaussian_test_field(sobolev_geometry, 1.0), -1.0)
    assert value == pytest.approx(_yukawa_quotient(1.0), rel=0.02)


def test_sobolev_quotient_is_scale_invariant(sobolev_geometry):
    wide = sobolev_quotient(gaussian_test_field(sobolev_geometry, 1.0), -1.0)
    narrow = sobolev_quotient(gaussian_test_field(sobolev_geometry, 0.5), -4.0)
    assert narrow == pytest.approx(wide, rel=0.01)


def test_uniform_sobolev_quotients(sobolev_geometry):
    fields = [gaussian_test_field(sobolev_geometry, w) for w in (0.5, 1.0)]
    scan = uniform_sobolev_probe(sobolev_geometry, [-1.0, 1.0j], fields)
    assert len(scan.quotients) == 2 and len(scan.quotients[0]) == 2
    assert scan.sup == max(max(row) for row in scan.quotients)
    with pytest.raises(SigmaOnSpectrum):
        uniform_sobolev_probe(sobolev_geometry, [2.0], fields)
