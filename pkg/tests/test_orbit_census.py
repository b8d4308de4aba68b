# -*- coding: utf-8 -*-
"""Torus censuses, class keys and homotopical growth."""

import dataclasses
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reebpa import fixtures
from reebpa.errors import IncompleteCensus, InsufficientRange
from reebpa.lefschetz_tracking import (
    elliptic,
    negative_hyperbolic,
    nonrotating_singular,
    positive_hyperbolic,
    rotating_singular,
)
from reebpa.local_models import count_fixed_points
from reebpa.orbit_census import (
    HomotopyClassKey,
    OrbitRecord,
    census_property_checks,
    class_key,
    classify_types,
    enumerate_torus_census,
    fit_rate,
    growth_function,
    growth_rate,
    synthetic_census,
)

from conftest import CAT_MAP, NEGATIVE_MAP

CAT_RATE = math.log((3.0 + math.sqrt(5.0)) / 2.0)


# ── Enumeration ──────────────────────────────────────────────────────────────
def test_two_levels_of_the_cat_map():
    census = enumerate_torus_census(CAT_MAP, 2, workers=1)
    assert len(census.records) == 4
    assert len(census.simple_records) == 3
    cover = [r for r in census.records if not r.simple]
    assert len(cover) == 1
    assert cover[0].multiplicity == 2
    assert cover[0].root == census.records[0].key


def test_level_totals_match_fixed_point_counts(cat_census_4, cat_map):
    for k in range(1, 5):
        total = sum(k // r.multiplicity for r in cat_census_4.records if r.period == k)
        assert total == count_fixed_points(cat_map, k)


def test_records_are_positive_hyperbolic(cat_census_4):
    assert {r.type for r in cat_census_4.records} == {positive_hyperbolic()}
    assert all(r.lefschetz == -1 and r.grading == 1 and r.good for r in cat_census_4.records)


def test_negative_map_doubles_are_bad():
    census = enumerate_torus_census(NEGATIVE_MAP, 2, workers=1)
    simple = census.simple_records
    doubles = [r for r in census.records if r.multiplicity == 2]
    assert len(simple) == 5 and len(doubles) == 5
    assert all(r.type == negative_hyperbolic() and r.lefschetz == 1 for r in simple)
    assert not any(r.good for r in doubles)
    assert all(r.lefschetz == -1 for r in doubles)


def test_orbit_points_are_periodic(cat_census_4, cat_map):
    for r in cat_census_4.simple_records:
        p = np.asarray(r.point)
        assert np.all((p >= 0.0) & (p < 1.0))
        d = np.asarray(cat_map.power(int(r.period)), dtype=float) @ p - p
        assert np.max(np.abs(d - np.round(d))) < 1e-9


@pytest.mark.parametrize("matrix, k_max", [(((1, 1), (1, 0)), 2), (CAT_MAP, 21), (CAT_MAP, 0)])
def test_enumeration_rejects_bad_input(matrix, k_max):
    with pytest.raises(ValueError):
        enumerate_torus_census(matrix, k_max)


# ── Class keys ───────────────────────────────────────────────────────────────
small = st.integers(-20, 20)


@settings(max_examples=40, deadline=None)
@given(small, small, small, small, st.integers(1, 5))
def test_class_key_is_conjugation_invariant(v0, v1, u0, u1, k):
    A = ((2, 1), (1, 1))
    key = class_key((v0, v1), k, A)
    # w + (A^k - I)u and A·w name the same class
    Ak = ((1, 0), (0, 1))
    for _ in range(k):
        Ak = tuple(tuple(sum(Ak[i][m] * A[m][j] for m in range(2)) for j in range(2)) for i in range(2))
    shifted = (v0 + (Ak[0][0] - 1) * u0 + Ak[0][1] * u1, v1 + Ak[1][0] * u0 + (Ak[1][1] - 1) * u1)
    moved = (A[0][0] * v0 + A[0][1] * v1, A[1][0] * v0 + A[1][1] * v1)
    assert class_key(shifted, k, A) == key
    assert class_key(moved, k, A) == key


def test_class_key_rejects_zero_winding():
    with pytest.raises(ValueError):
        class_key((0, 0), 0, CAT_MAP)


def test_key_labels_and_contractibility():
    key = HomotopyClassKey("2,1,1,1", 3, (0, 4))
    assert key.label == "2,1,1,1|3|0,4"
    assert HomotopyClassKey.from_dict(key.to_dict()) == key
    assert HomotopyClassKey("synthetic", 0).contractible
    assert not key.contractible


# ── Growth ───────────────────────────────────────────────────────────────────
def test_growth_function_of_cat_map(cat_census_4):
    assert [growth_function(cat_census_4, L) for L in (1, 2, 3, 4)] == [1, 4, 10, 23]
    with pytest.raises(IncompleteCensus):
        growth_function(cat_census_4, 5)


def test_growth_rate_matches_entropy(cat_census_12):
    rate = growth_rate(cat_census_12)
    assert rate == pytest.approx(CAT_RATE, rel=0.05)


def test_scaled_census_divides_the_rate(cat_census_12):
    assert growth_rate(cat_census_12.scaled(2.0)) == pytest.approx(growth_rate(cat_census_12) / 2.0)
    with pytest.raises(ValueError):
        cat_census_12.scaled(0.0)


def test_growth_rate_needs_eight_levels(cat_census_4):
    with pytest.raises(InsufficientRange):
        growth_rate(cat_census_4)


def test_fit_rate_of_pure_exponential():
    L = list(range(1, 11))
    counts = [math.exp(0.7 * x) for x in L]
    assert fit_rate(L, counts, prefactor="none") == pytest.approx(0.7)
    with pytest.raises(ValueError):
        fit_rate(L, counts, prefactor="bowen")


# ── Structural checks ────────────────────────────────────────────────────────
@pytest.mark.parametrize(
    "types, case",
    [
        ([], "empty"),
        ([negative_hyperbolic()], "1b"),
        ([elliptic()], "1c"),
        ([rotating_singular(3, 1)], "1c"),
        ([positive_hyperbolic(), nonrotating_singular(4)], "1a"),
        ([negative_hyperbolic(), positive_hyperbolic()], None),
        ([elliptic(), elliptic()], None),
    ],
)
def test_classify_types(types, case):
    assert classify_types(types) == case


def test_cat_census_passes_property_checks(cat_census_4):
    report = census_property_checks(cat_census_4)
    assert report.passed
    assert report.powers_checked > 0
    assert not report.power_check_skipped


def test_power_class_without_its_root_is_reported(cat_census_4):
    pruned = dataclasses.replace(cat_census_4, records=[r for r in cat_census_4.records if r.period != 1])
    root = cat_census_4.records[0].key
    report = census_property_checks(pruned)
    assert not report.passed
    assert report.missing_roots
    assert all(m["root"] == root.to_dict() for m in report.missing_roots)
    assert not report.violations


def test_mixed_fixture_violates_trichotomy():
    report = census_property_checks(fixtures.load_census("mixed"))
    assert not report.passed
    assert report.power_check_skipped
    assert report.violations[0]["types"] == ["negative_hyperbolic", "positive_hyperbolic"]


def test_synthetic_census_rejects_records_past_cutoff():
    rec = OrbitRecord.build(3.0, positive_hyperbolic(), HomotopyClassKey("synthetic", 1))
    with pytest.raises(ValueError):
        synthetic_census([rec], 2.0)


def test_merge_is_disjoint_union(cat_census_4):
    merged = cat_census_4.merge(fixtures.load_census("prong4_phi"))
    assert len(merged.records) == len(cat_census_4.records) + 1
    assert merged.complete_to == 2.0


# ── Output ───────────────────────────────────────────────────────────────────
def test_json_lines_output(cat_census_4, tmp_path):
    path = tmp_path / "records.jsonl"
    cat_census_4.to_json_lines(path, simple_only=True)
    frame = pd.read_json(path, lines=True)
    assert len(frame) == len(cat_census_4.simple_records)
    assert set(frame["multiplicity"]) == {1}
    assert list(frame["period"]) == sorted(frame["period"])
