# -*- coding: utf-8 -*-
"""
tests/conftest.py

Shared fixtures: the cat-map census, chart forms and small flow models.
"""

import pytest

from reebpa import fixtures
from reebpa.flow_engine import ChartReebModel, ExpressionFieldModel, Section, SuspensionModel
from reebpa.local_models import SuspensionFlow, TorusAutomorphism
from reebpa.orbit_census import enumerate_torus_census
from reebpa.singular_contact import GridSpec

CAT_MAP = ((2, 1), (1, 1))
NEGATIVE_MAP = ((-2, -1), (-1, -1))

# planar part of the hyp Reeb field, slowed in t away from the core orbit
SLOW_T = "1/(1 + 50*(x^2 + y^2))"


@pytest.fixture(scope="session")
def cat_map():
    return TorusAutomorphism(CAT_MAP)


@pytest.fixture(scope="session")
def negative_map():
    return TorusAutomorphism(NEGATIVE_MAP)


@pytest.fixture(scope="session")
def cat_census_4():
    return enumerate_torus_census(CAT_MAP, 4, workers=1)


@pytest.fixture(scope="session")
def cat_census_12():
    return enumerate_torus_census(CAT_MAP, 12)


@pytest.fixture
def small_grid():
    return GridSpec(8, 16, 16)


@pytest.fixture
def hyp_phi():
    return ChartReebModel(fixtures.load_form("hyp"), fixtures.load_chart("hyp"), None)


@pytest.fixture
def hyp_psi():
    return ChartReebModel(fixtures.load_form("hyp"), fixtures.load_chart("hyp"), fixtures.load_profile("hyp"))


@pytest.fixture
def hyp_section(hyp_phi):
    return Section.for_model(hyp_phi, 0.0, r_max=0.5, r_p=0.3)


@pytest.fixture
def slowed_field():
    return ExpressionFieldModel(SLOW_T, f"-0.5*x*{SLOW_T}", f"0.5*y*{SLOW_T}", name="slowed")


@pytest.fixture
def cat_suspension(cat_map):
    return SuspensionModel(SuspensionFlow(cat_map))
