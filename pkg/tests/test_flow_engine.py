# -*- coding: utf-8 -*-
"""Flow models, integration, return maps and the periodic-orbit search."""

import math

import numpy as np
import pytest

from reebpa.errors import NoReturn, NonConvergence, NonTransversalSection
from reebpa.flow_engine import (
    ExpressionFieldModel,
    Section,
    TorsionModel,
    damped_newton,
    find_periodic_orbits,
    holonomy_map,
    integrate,
    iterate_return,
    reeb_parametrization_defect,
    return_map,
    seed_grid,
    wrap_displacement,
)


def test_wrap_displacement():
    np.testing.assert_allclose(wrap_displacement([0.9, -0.6], 1.0), [-0.1, 0.4])
    np.testing.assert_allclose(wrap_displacement([0.9, -0.6], None), [0.9, -0.6])


# ── Integration ──────────────────────────────────────────────────────────────
def test_constant_field_is_a_straight_line():
    f = ExpressionFieldModel("1", "0.5", "-2")
    traj = integrate(f, (0.0, 0.1, 0.2), 2.0)
    np.testing.assert_allclose(traj.end, (2.0, 1.1, -3.8), atol=1e-9)
    np.testing.assert_allclose(traj(1.0), (1.0, 0.6, -1.8), atol=1e-9)
    assert traj.duration == pytest.approx(2.0)
    assert traj.arc_length() == pytest.approx(2.0 * math.sqrt(1.0 + 0.25 + 4.0), rel=1e-9)


def test_integrate_rejects_bad_arguments():
    f = ExpressionFieldModel("1", "0", "0")
    with pytest.raises(ValueError):
        integrate(f, (0.0, 0.0, 0.0), -1.0)
    with pytest.raises(ValueError):
        integrate(f, (0.0, 0.0, 0.0), 1.0, tol=0.0)


def test_zero_time_trajectory():
    traj = integrate(ExpressionFieldModel("1", "0", "0"), (0.0, 0.3, 0.4), 0.0)
    assert traj.end == (0.0, 0.3, 0.4)


# ── Sections ─────────────────────────────────────────────────────────────────
def test_section_rejects_bad_radii():
    with pytest.raises(ValueError):
        Section(0.0, 0.2, 0.3)
    with pytest.raises(ValueError):
        Section(0.0, 0.2, 0.0)


def test_non_transversal_section():
    f = ExpressionFieldModel("x", "0", "0")
    with pytest.raises(NonTransversalSection):
        Section.for_model(f, 0.0, r_max=0.5, r_p=0.25)


def test_sample_points_stay_inside_sub_disk():
    sec = Section(0.0, 0.5, 0.2, (0.1, -0.1))
    pts = sec.sample_points(rings=3, per_ring=6)
    assert len(pts) == 1 + 3 * 6
    assert np.all(np.hypot(pts[:, 0] - 0.1, pts[:, 1] + 0.1) < 0.2)


def test_seed_grid():
    assert seed_grid(periodic=True, n=4).shape == (16, 2)
    pts = seed_grid((1.0, 0.0), 0.5, 8)
    assert np.all(np.hypot(pts[:, 0] - 1.0, pts[:, 1]) <= 0.5)


# ── Return maps ──────────────────────────────────────────────────────────────
def test_hyperbolic_return_map(hyp_phi, hyp_section):
    res = return_map(hyp_phi, hyp_section, (0.1, 0.2))
    assert res.success
    assert res.tau == pytest.approx(1.0, rel=1e-6)
    np.testing.assert_allclose(res.image, (0.1 * math.exp(-0.5), 0.2 * math.exp(0.5)), rtol=1e-5)


def test_reeb_trajectory_is_unit_speed_for_alpha(hyp_phi):
    traj = integrate(hyp_phi, (0.0, 0.2, -0.1), 1.5)
    assert reeb_parametrization_defect(hyp_phi, traj) < 1e-6


@pytest.mark.parametrize("t0", [0.0, 0.5, 2.0])
def test_cat_suspension_return_is_the_map(cat_suspension, cat_map, t0):
    # for integer t0 the stop and the gluing fall on the same crossing
    sec = Section(t0, 0.5, 0.25)
    res = return_map(cat_suspension, sec, (0.1, 0.3))
    assert res.tau == pytest.approx(1.0)
    np.testing.assert_allclose(res.image, cat_map.apply_cartesian(np.array([0.1, 0.3])), atol=1e-9)


def test_holonomy_and_iterate_agree(cat_suspension, cat_map):
    sec = Section(0.0, 0.5, 0.25)
    q, times = iterate_return(cat_suspension, sec, (0.2, 0.7), 2)
    assert times == pytest.approx([1.0, 1.0])
    np.testing.assert_allclose(holonomy_map(cat_suspension, sec, 2)(np.array([0.2, 0.7])), q, atol=1e-9)
    expected = cat_map.apply_cartesian(cat_map.apply_cartesian(np.array([0.2, 0.7])))
    np.testing.assert_allclose(q, expected, atol=1e-9)


def test_no_return_within_horizon():
    f = ExpressionFieldModel("0.01", "0", "0")
    with pytest.raises(NoReturn):
        return_map(f, Section(0.0, 0.5, 0.25), (0.0, 0.0), horizon=5.0)


def test_torsion_model_moves_only_in_plane():
    f = TorsionModel(2)
    traj = integrate(f, (0.25, 0.1, 0.1), 0.5)
    assert traj.end[0] == pytest.approx(0.25)
    np.testing.assert_allclose(np.mod(traj.end[1:], 1.0), (0.1, 0.6), atol=1e-9)
    with pytest.raises(ValueError):
        TorsionModel(0)


# ── Newton and periodic orbits ───────────────────────────────────────────────
def test_damped_newton_solves_a_nonlinear_system():
    x = damped_newton(lambda v: np.array([v[0] ** 2 - 2.0, v[1] - v[0]]), (1.0, 0.0))
    np.testing.assert_allclose(x, (math.sqrt(2.0), math.sqrt(2.0)), atol=1e-10)


def test_damped_newton_reports_failure():
    with pytest.raises(NonConvergence):
        damped_newton(lambda v: np.array([v[0] ** 2 + 1.0, v[1]]), (0.5, 0.0))


def test_cat_suspension_has_one_simple_orbit(cat_suspension):
    search = find_periodic_orbits(cat_suspension, Section(0.0, 0.5, 0.25), seed_grid(periodic=True, n=4),
                                  k=1, workers=1)
    assert len(search.points) == 1
    p = search.points[0]
    assert np.max(np.abs(wrap_displacement(p.point, 1.0))) < 1e-6
    assert p.period == pytest.approx(1.0)


def test_hyperbolic_core_orbit(hyp_phi, hyp_section):
    search = find_periodic_orbits(hyp_phi, hyp_section, hyp_section.sample_points(1, 4), workers=1)
    assert len(search.points) == 1
    assert np.hypot(*search.points[0].point) < 1e-6
    assert search.to_dict()["orbits"][0]["k"] == 1


def test_iterate_must_be_positive(cat_suspension):
    with pytest.raises(ValueError):
        find_periodic_orbits(cat_suspension, Section(), [(0.1, 0.1)], k=0)


def test_return_of_the_cat_suspension_at_known_point(cat_suspension):
    res = return_map(cat_suspension, Section(0.0, 0.5, 0.25), (0.1, 0.3))
    np.testing.assert_allclose(res.image, (0.5, 0.4), atol=1e-9)


def test_seeds_converging_to_one_orbit_are_merged(hyp_phi, hyp_section):
    seeds = [(0.01, 0.0), (0.0, 0.01), (-0.01, 0.0), (0.0, -0.01), (0.005, 0.005)]
    search = find_periodic_orbits(hyp_phi, hyp_section, seeds, workers=1)
    assert search.failures == 0
    assert len(search.points) == 1
