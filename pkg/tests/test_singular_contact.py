# -*- coding: utf-8 -*-
"""Chart forms, flattening, smoothing and the contact checks."""

import math

import numpy as np
import pytest

from reebpa import fixtures
from reebpa.errors import NoEpsilonFound, NonContactPoint
from reebpa.singular_contact import (
    ChartContactForm,
    GridSpec,
    ProfileBlend,
    QuadraticProfile,
    SmoothedForm,
    SmoothingChart,
    SmoothingFunction,
    annulus_flux,
    axis_decay,
    convex_family_check,
    estimate_lipschitz,
    find_epsilon,
    flux_exponent,
    gray_bound,
    pullback_components,
    reeb_field,
    smoothed_form,
    t_component_bound,
    twisted_form_check,
    verify_contact,
    volume_decomposition,
    volume_inequality_check,
    whitney_distance,
)

IDENTITY = SmoothingChart.identity()


def _std():
    return fixtures.load_form("std")


# ── Profiles and charts ──────────────────────────────────────────────────────
def test_smoothing_function_support():
    chi = SmoothingFunction(0.1, 0.2, 0.1)
    assert chi.value(0.1) == pytest.approx(0.1 * 0.01)
    assert chi.value(0.95) == 0.0
    assert chi.derivative(0.95) == 0.0
    assert chi.scaled(0.5).A == pytest.approx(0.05)


@pytest.mark.parametrize("args", [(0.0, 0.2, 0.1), (1.0, 0.5, 0.5), (1.0, 0.0, 0.1), (1.0, 0.2, 0.0)])
def test_smoothing_function_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        SmoothingFunction(*args)


def test_profile_blend_is_convex_combination():
    a, b = QuadraticProfile(1.0), QuadraticProfile(3.0)
    blend = ProfileBlend(a, b, 0.25)
    assert blend.value(0.5) == pytest.approx(0.75 * 0.25 + 0.25 * 0.75)
    assert blend.derivative(0.5) == pytest.approx(0.75 * 1.0 + 0.25 * 3.0)


def test_flattening_chart_is_flat_at_axis_and_identity_near_rim():
    chart = SmoothingChart()
    assert chart.flatness_report()["flat"]
    assert not IDENTITY.flatness_report()["flat"]
    assert float(chart.g(1.0)) == pytest.approx(1.0)
    assert float(chart.g_prime(0.99)) == pytest.approx(1.0)
    rim = np.linspace(0.95, 1.0, 11)
    np.testing.assert_allclose(chart.g(rim), rim, atol=1e-12)
    r = np.linspace(0.05, 1.0, 200)
    assert np.all(np.diff(chart.g(r)) > 0.0)


def test_chart_from_config():
    assert SmoothingChart.from_config({"g_c": None}).is_identity
    assert SmoothingChart.from_config({"g_c": 2.0, "radius": 0.5}).radius == 0.5
    assert SmoothingChart.from_config({}).splice == (0.8, 0.95)
    assert SmoothingChart.from_config({"splice": [0.8, 1.0]}).splice == (0.8, 1.0)
    with pytest.raises(ValueError):
        SmoothingChart(c=1.0, splice=(0.9, 0.8))


# ── Pointwise formulas ───────────────────────────────────────────────────────
def test_pullback_with_identity_chart_is_the_form():
    u, a, b = pullback_components(_std(), IDENTITY, (0.3, 0.5, 1.0))
    assert (float(u), float(a), float(b)) == pytest.approx((1.0, 0.0, 0.25))


def test_smoothing_adds_profile_to_the_theta_component():
    chi = SmoothingFunction(0.1, 0.2, 0.1)
    p = (0.3, 0.1, 1.0)
    u0, a0, b0 = pullback_components(_std(), IDENTITY, p)
    u, a, b = smoothed_form(_std(), IDENTITY, chi, p)
    assert (float(u), float(a)) == pytest.approx((float(u0), float(a0)))
    assert float(b) == pytest.approx(float(b0) + chi.value(0.1))


def test_volume_decomposition_of_standard_form():
    big_g, big_h = volume_decomposition(_std(), IDENTITY, None, (0.0, 0.5, 0.0))
    assert float(big_g) == pytest.approx(1.0, rel=1e-8)
    assert float(big_h) == 0.0


def test_decomposition_matches_direct_density():
    form = fixtures.load_form("bp")
    chi = SmoothingFunction(0.1, 0.2, 0.1)
    sf = SmoothedForm(form, SmoothingChart(), chi)
    t, r, th = GridSpec(8, 8, 8, r_min=0.2).mesh()
    w_direct = sf.direct_exterior_derivative(t, r, th)
    w_chain = sf.exterior_derivative(t, r, th)
    for d, c in zip(w_direct, w_chain):
        np.testing.assert_allclose(d, c, atol=1e-5)


def test_reeb_field_of_standard_form_is_dt():
    res = reeb_field(_std(), IDENTITY, None, (0.0, 0.5, 0.3))
    assert float(res.t_dot) == pytest.approx(1.0, abs=1e-9)
    assert float(res.r_dot) == pytest.approx(0.0, abs=1e-9)
    assert float(res.theta_dot) == pytest.approx(0.0, abs=1e-9)
    assert res.residual_alpha < 1e-9


def test_reeb_field_rejects_non_contact_point():
    form = ChartContactForm.from_strings("1", "0", "0")
    with pytest.raises(NonContactPoint):
        reeb_field(form, IDENTITY, None, (0.0, 0.5, 0.0))


@pytest.mark.parametrize("name", ["std", "bp"])
def test_reeb_residuals_on_smoothed_fixtures(name):
    grid = GridSpec(8, 16, 16, r_min=0.05, delta=0.05)
    res = reeb_field(fixtures.load_form(name), fixtures.load_chart(name),
                     fixtures.load_profile(name).scaled(0.25), tuple(grid.mesh()))
    tol = fixtures.tolerances(name)
    assert res.residual_alpha < tol["residual"]
    assert res.residual_iota < tol["kernel"]


# ── Contact verification ─────────────────────────────────────────────────────
def test_standard_form_is_contact_on_identity_chart(small_grid):
    report = verify_contact(_std(), IDENTITY, None, small_grid)
    assert report.passed
    assert report.axis_slope == pytest.approx(2.0, rel=1e-6)
    assert report.failing_cells == []


def test_flattened_pullback_loses_linear_bound(small_grid):
    report = verify_contact(_std(), SmoothingChart(), None, small_grid)
    assert not report.passed
    assert report.failing_cells


@pytest.mark.parametrize("name", ["std", "bp"])
def test_find_epsilon_restores_contactness(name, small_grid):
    form, chart, chi = fixtures.load_form(name), fixtures.load_chart(name), fixtures.load_profile(name)
    cert = find_epsilon(form, chart, chi, small_grid)
    assert cert.report.passed
    assert cert.epsilon == 2.0 ** (-cert.step)
    assert cert.report.axis_slope > 0.0
    half = volume_inequality_check(form, chart, chi.scaled(cert.epsilon / 2.0), 0.9, small_grid)
    assert half.passed


def test_negative_axis_fixture_is_contact_off_the_axis():
    r = np.array([0.1, 0.4, 0.9])
    density = fixtures.load_form("neg_axis").density(0.3, r, 1.0)
    np.testing.assert_allclose(density, 2.0 * r, rtol=1e-6)


def test_negative_axis_fixture_has_no_epsilon(small_grid):
    name = "neg_axis"
    with pytest.raises(NoEpsilonFound) as info:
        find_epsilon(fixtures.load_form(name), fixtures.load_chart(name), fixtures.load_profile(name),
                     small_grid, ladder=8)
    assert info.value.last_report is not None
    assert not info.value.last_report.passed


def test_large_amplitude_violates_volume_inequality(small_grid):
    form, chart = _std(), SmoothingChart()
    report = volume_inequality_check(form, chart, SmoothingFunction(1e3, 0.2, 0.1), 0.99, small_grid)
    assert not report.passed
    assert report.violations
    with pytest.raises(ValueError):
        volume_inequality_check(form, chart, None, 1.5, small_grid)


# ── Flux, Lipschitz, Gray ────────────────────────────────────────────────────
def test_annulus_flux_of_standard_form():
    assert annulus_flux(_std(), 0.0, 0.1) == pytest.approx(2.0 * math.pi * 0.01)


@pytest.mark.parametrize("name", ["std", "bp", "bp_pert"])
def test_flux_exponent_is_quadratic(name):
    assert flux_exponent(fixtures.load_form(name)) == pytest.approx(2.0, abs=0.1)


def test_lipschitz_of_standard_form():
    assert estimate_lipschitz(_std()) == pytest.approx(1.0, abs=1e-9)


def test_gray_bound_vanishes_without_dt_dr_term(small_grid):
    assert gray_bound(fixtures.load_form("bp_pert"), IDENTITY, small_grid) == pytest.approx(0.0, abs=1e-12)


def test_gray_bound_of_drift_fixture(small_grid):
    bound = gray_bound(fixtures.load_form("bp_drift"), IDENTITY, small_grid)
    assert 0.1 < bound < 0.15


def test_whitney_distance_of_identical_forms(small_grid):
    sf = SmoothedForm(_std(), IDENTITY, None)
    assert whitney_distance(sf, sf, small_grid) == (0.0, 0.0)


# ── Extended checks ──────────────────────────────────────────────────────────
def test_axis_decay_shrinks_towards_axis():
    chi = fixtures.load_profile("bp").scaled(0.25)
    decay = axis_decay(fixtures.load_form("bp"), SmoothingChart(), chi, [0.01, 0.05, 0.1])
    assert decay[0] <= decay[-1] + 1e-12


def test_twisted_family_stays_contact(small_grid):
    chi = fixtures.load_profile("std").scaled(0.25)
    report = twisted_form_check(_std(), SmoothingChart(), chi, 0, small_grid)
    assert report.passed
    assert len(report.s_values) == 5


def test_convex_family_between_small_profiles(small_grid):
    chi = fixtures.load_profile("std")
    report = convex_family_check(_std(), SmoothingChart(), chi.scaled(0.01), chi.scaled(0.02), 0.5, small_grid)
    assert report.passed


def test_t_component_bound_is_positive(small_grid):
    chi = fixtures.load_profile("std").scaled(0.25)
    bound = t_component_bound(_std(), SmoothingChart(), chi, small_grid)
    assert bound["C"] > 0.0
