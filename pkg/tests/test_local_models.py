# -*- coding: utf-8 -*-
"""Standard pseudo-Anosov maps, torus automorphisms and suspensions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reebpa.errors import LatticeOverflow
from reebpa.local_models import (
    StandardPAMap,
    SuspensionFlow,
    TorusAutomorphism,
    apply_A_lambda,
    apply_standard_pa,
    branched_projection,
    count_fixed_points,
    suspension_flow,
)

from conftest import CAT_MAP


def _polar_to_xy(r, th):
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def _points(seed, n=200):
    rng = np.random.default_rng(seed)
    rho = 0.9 * np.sqrt(rng.random(n)) + 0.01
    ang = 2.0 * np.pi * rng.random(n)
    return _polar_to_xy(rho, ang)


# ── Standard pseudo-Anosov map ───────────────────────────────────────────────
def test_two_prong_map_is_a_lambda():
    pts = _points(0)
    m = StandardPAMap(2, 0, 2.0)
    np.testing.assert_allclose(m.apply_cartesian(pts), apply_A_lambda(2.0, pts), atol=1e-12)


@pytest.mark.parametrize("n, k", [(2, 0), (4, 0), (4, 2), (6, 0), (6, 4)])
def test_branched_projection_conjugates_to_a_lambda(n, k):
    pts = _points(n + k)
    m = StandardPAMap(n, k, 1.7)
    r, th = np.hypot(pts[:, 0], pts[:, 1]), np.arctan2(pts[:, 1], pts[:, 0])
    img = m.apply_cartesian(pts)
    ri, thi = np.hypot(img[:, 0], img[:, 1]), np.arctan2(img[:, 1], img[:, 0])
    lhs = _polar_to_xy(*branched_projection(n, ri, thi))
    rhs = apply_A_lambda(1.7, _polar_to_xy(*branched_projection(n, r, th)))
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@pytest.mark.parametrize("n, k", [(3, 0), (3, 1), (4, 1), (5, 2), (6, 3)])
def test_branched_projection_conjugates_up_to_sign(n, k):
    pts = _points(10 * n + k)
    m = StandardPAMap(n, k, 1.7)
    r, th = np.hypot(pts[:, 0], pts[:, 1]), np.arctan2(pts[:, 1], pts[:, 0])
    img = m.apply_cartesian(pts)
    ri, thi = np.hypot(img[:, 0], img[:, 1]), np.arctan2(img[:, 1], img[:, 0])
    lhs = _polar_to_xy(*branched_projection(n, ri, thi))
    rhs = apply_A_lambda(1.7, _polar_to_xy(*branched_projection(n, r, th)))
    if n % 2 == 0:
        # rotation by k sectors projects to rotation by kπ
        np.testing.assert_allclose(lhs, (-1) ** k * rhs, atol=1e-9)
    else:
        gap = np.minimum(np.linalg.norm(lhs - rhs, axis=1), np.linalg.norm(lhs + rhs, axis=1))
        assert np.max(gap) < 1e-9


@pytest.mark.parametrize("n, k", [(3, 0), (3, 1), (4, 3), (5, 2)])
def test_inverse_undoes_map(n, k):
    pts = _points(7)
    m = StandardPAMap(n, k, 2.5)
    np.testing.assert_allclose(m.apply_inverse_cartesian(m.apply_cartesian(pts)), pts, atol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_continuous_across_sector_boundaries(n):
    m = StandardPAMap(n, 1, 2.0)
    for j in range(1, n):
        edge = 2.0 * math.pi * j / n
        a = m.apply_cartesian(_polar_to_xy(np.array(0.5), np.array(edge - 1e-9)))
        b = m.apply_cartesian(_polar_to_xy(np.array(0.5), np.array(edge + 1e-9)))
        assert np.linalg.norm(a - b) < 1e-6


def test_prong_rays_expand_and_rotate():
    m = StandardPAMap(4, 1, 3.0)
    np.testing.assert_allclose(m.prong_rays(), [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert m.prong_permutation() == [1, 2, 3, 0]
    r, th = apply_standard_pa(m, (0.2, 0.0))
    assert r == pytest.approx(0.6)
    assert th == pytest.approx(math.pi / 2)


def test_rotation_is_reduced_mod_prongs():
    assert StandardPAMap(4, 5, 2.0).k == 1
    assert StandardPAMap(3, -1, 2.0).k == 2


def test_origin_is_fixed():
    r, _ = apply_standard_pa(StandardPAMap(5, 2, 2.0), (0.0, 1.0))
    assert r == 0.0


@pytest.mark.parametrize("n, lam", [(1, 2.0), (3, 1.0), (3, 0.5)])
def test_invalid_parameters(n, lam):
    with pytest.raises(ValueError):
        StandardPAMap(n, 0, lam)


# ── Torus automorphisms ──────────────────────────────────────────────────────
@pytest.mark.parametrize("value", ["2,1,1,1", [2, 1, 1, 1], [[2, 1], [1, 1]], CAT_MAP])
def test_coerce_forms(value):
    A = TorusAutomorphism.coerce(value)
    assert A.matrix == CAT_MAP
    assert A.label == "2,1,1,1"
    assert A.det == 1 and A.trace == 3
    assert A.stretch == pytest.approx((3.0 + math.sqrt(5.0)) / 2.0)
    assert A.is_orientation_preserving


@pytest.mark.parametrize("matrix", [((1, 1), (0, 1)), ((2, 0), (0, 1)), ((0, 1), (-1, 0))])
def test_rejects_non_hyperbolic_or_non_unimodular(matrix):
    with pytest.raises(ValueError):
        TorusAutomorphism(matrix)


def test_fixed_point_counts(cat_map, negative_map):
    assert [count_fixed_points(cat_map, k) for k in range(1, 5)] == [1, 5, 16, 45]
    assert [count_fixed_points(negative_map, k) for k in (1, 2)] == [5, 5]


def test_power_overflow_is_reported(cat_map):
    with pytest.raises(LatticeOverflow):
        cat_map.power(100)


def test_power_and_inverse(cat_map):
    assert cat_map.power(2) == ((5, 3), (3, 2))
    assert cat_map.power(-1) == ((1, -1), (-1, 2))
    assert cat_map.power(0) == ((1, 0), (0, 1))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_torus_map_stays_in_unit_square(x, y):
    A = TorusAutomorphism(CAT_MAP)
    img = A.apply_cartesian(np.array([x, y]))
    assert np.all((img >= 0.0) & (img < 1.0))
    back = A.apply_inverse_cartesian(img)
    d = back - np.array([x, y])
    assert np.max(np.abs(d - np.round(d))) < 1e-9


# ── Suspension ───────────────────────────────────────────────────────────────
def test_closed_orbit_periods(cat_map):
    flow = SuspensionFlow(cat_map)
    assert flow.closed_orbit_period((0.0, 0.0)) == 1
    assert flow.closed_orbit_period((0.8, 0.6)) == 2


def test_suspension_flow_glues_at_integers(cat_map):
    flow = SuspensionFlow(cat_map)
    s, p = suspension_flow(flow, (0.5, np.array([0.1, 0.3])), 1.7)
    assert s == pytest.approx(0.2)
    expected = cat_map.apply_cartesian(cat_map.apply_cartesian(np.array([0.1, 0.3])))
    np.testing.assert_allclose(p, expected, atol=1e-12)


def test_only_unit_roof(cat_map):
    with pytest.raises(ValueError):
        SuspensionFlow(cat_map, roof="2")
