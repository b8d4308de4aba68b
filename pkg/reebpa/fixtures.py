# -*- coding: utf-8 -*-
"""
reebpa/fixtures.py

Catalogued chart forms and synthetic censuses.

assets/fixtures/forms.json is read once at import time; accessors build
fresh model objects from it on each call.
"""

from __future__ import annotations

import json
import logging
import os
from typing import Optional

from reebpa.lefschetz_tracking import OrbitType
from reebpa.orbit_census import Census, synthetic_census
from reebpa.singular_contact import ChartContactForm, SmoothingChart, SmoothingFunction

logger = logging.getLogger(__name__)

# ── Path resolution ──────────────────────────────────────────────────────────
_PKG_DIR = os.path.dirname(os.path.abspath(__file__))
_ROOT_DIR = os.path.dirname(_PKG_DIR)
_ASSETS_DIR = os.path.join(_ROOT_DIR, "assets")
FIXTURES_PATH = os.path.join(_ASSETS_DIR, "fixtures", "forms.json")
SCHEMA_PATH = os.path.join(_ASSETS_DIR, "schema", "run_config.schema.json")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, ValueError) as exc:
        logger.warning("could not load %s: %s", path, exc)
        return {}


_CATALOGUE: dict = _load_json(FIXTURES_PATH)


def form_names() -> list[str]:
    return sorted(_CATALOGUE.get("forms", {}))


def census_names() -> list[str]:
    return sorted(_CATALOGUE.get("censuses", {}))


def _entry(section: str, name: str) -> dict:
    try:
        return _CATALOGUE[section][name]
    except KeyError:
        known = ", ".join(sorted(_CATALOGUE.get(section, {}))) or "none"
        raise KeyError(f"unknown fixture '{name}' (known: {known})") from None


def form_entry(name: str) -> dict:
    return dict(_entry("forms", name))


def load_form(name: str) -> ChartContactForm:
    e = _entry("forms", name)
    return ChartContactForm.from_strings(e["u"], e["a"], e["b"], e.get("lipschitz"), name)


def load_chart(name: str) -> SmoothingChart:
    return SmoothingChart.from_config(_entry("forms", name).get("chart"))


def load_profile(name: str) -> Optional[SmoothingFunction]:
    cfg = _entry("forms", name).get("chi")
    if not cfg:
        return None
    return SmoothingFunction(float(cfg["A"]), float(cfg["eps_in"]), float(cfg["eps_out"]))


def tolerances(name: str) -> dict:
    return dict(_entry("forms", name).get("tolerances", {}))


def load_census(name: str) -> Census:
    e = _entry("censuses", name)
    return synthetic_census(e["records"], float(e["cutoff"]), substrate=f"synthetic:{name}")


def euler_suite() -> list[dict]:
    """[{name, phi: [OrbitType], psi: int, pass: bool}]."""
    return [
        {"name": c["name"], "phi": [OrbitType.from_dict(t) for t in c["phi"]],
         "psi": int(c["psi"]), "pass": bool(c["pass"])}
        for c in _CATALOGUE.get("euler_suite", [])
    ]
