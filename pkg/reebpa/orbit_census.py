# -*- coding: utf-8 -*-
"""
reebpa/orbit_census.py

Closed-orbit censuses of suspension flows of hyperbolic torus automorphisms,
exact free-homotopy class keys, and homotopical growth.

A closed orbit of period k in the mapping torus of A is the group element
(w, k) of ℤ² ⋊_A ℤ. Conjugacy acts by w ↦ w + (Aᵏ − I)v and w ↦ Aw, so a
class is an A-orbit of cosets in ℤ²/(Aᵏ − I)ℤ². Cosets are labelled in Smith
coordinates u = P·w mod (d1, d2) where D = P(Aᵏ − I)Q.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from reebpa.errors import IncompleteCensus, InsufficientRange
from reebpa.lefschetz_tracking import OrbitType, index_table
from reebpa.local_models import TorusAutomorphism, mat_mul
from reebpa.smith import smith_normal_form, unimodular_inverse
from reebpa.workers import parallel_map

logger = logging.getLogger(__name__)

MAX_LEVEL = 20
COSET_WARNING = 10 ** 6
MIN_GROWTH_LEVELS = 8
PERIOD_TOL = 1e-9
SYNTHETIC = "synthetic"


# ---------------------------------------------------------------------------
# Keys and records
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class HomotopyClassKey:
    """(substrate, winding k, canonical coset label)."""

    substrate: str
    k: int
    rep: tuple = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "rep", tuple(int(v) for v in self.rep))

    @property
    def contractible(self) -> bool:
        return self.k == 0 and not any(self.rep)

    @property
    def label(self) -> str:
        return f"{self.substrate}|{self.k}|{','.join(str(v) for v in self.rep)}"

    def to_dict(self) -> dict:
        return {"substrate": self.substrate, "k": self.k, "rep": list(self.rep)}

    @classmethod
    def from_dict(cls, d) -> "HomotopyClassKey":
        if isinstance(d, HomotopyClassKey):
            return d
        return cls(str(d.get("substrate", SYNTHETIC)), int(d["k"]), tuple(d.get("rep", (0, 0))))


@dataclass(frozen=True)
class OrbitRecord:
    """One closed orbit: its simple type, cover multiplicity and class.

    `lefschetz`, `grading` and `good` are derived from the type of the
    m-fold cover; use `OrbitRecord.build` rather than filling them by hand.
    """

    period: float
    type: OrbitType
    key: HomotopyClassKey
    lefschetz: int
    grading: int
    good: bool
    multiplicity: int = 1
    root: Optional[HomotopyClassKey] = None
    point: tuple = ()

    @classmethod
    def build(cls, period: float, orbit_type: OrbitType, key: HomotopyClassKey,
              multiplicity: int = 1, root: Optional[HomotopyClassKey] = None,
              point: tuple = ()) -> "OrbitRecord":
        if multiplicity < 1:
            raise ValueError(f"multiplicity must be >= 1, got {multiplicity}")
        lef = index_table(orbit_type.iterate(multiplicity))
        good = not (orbit_type.kind == "negative_hyperbolic" and multiplicity % 2 == 0)
        return cls(float(period), orbit_type, key, lef, 0 if lef == 1 else 1, good,
                   int(multiplicity), root if root is not None else (key if multiplicity == 1 else None),
                   tuple(float(v) for v in point))

    @property
    def simple(self) -> bool:
        return self.multiplicity == 1

    @property
    def cover_type(self) -> OrbitType:
        return self.type.iterate(self.multiplicity)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "type": self.type.label,
            "kind": self.type.kind,
            "prongs": self.type.prongs,
            "rotation": self.type.rotation,
            "substrate": self.key.substrate,
            "k": self.key.k,
            "rep": list(self.key.rep),
            "multiplicity": self.multiplicity,
            "lefschetz": self.lefschetz,
            "grading": self.grading,
            "good": self.good,
            "root_k": None if self.root is None else self.root.k,
            "root_rep": None if self.root is None else list(self.root.rep),
            "point": list(self.point),
        }


@dataclass
class Census:
    """Closed orbits with period up to `cutoff`, covers included."""

    substrate: str
    cutoff: float
    records: list
    complete_to: float
    matrix: Optional[tuple] = None
    description: dict = field(default_factory=dict)

    def require_complete(self, L: float):
        if L > self.complete_to + PERIOD_TOL:
            raise IncompleteCensus(L, self.complete_to)

    def records_in(self, key: HomotopyClassKey, L: float) -> list:
        return [r for r in self.records if r.key == key and r.period <= L + PERIOD_TOL]

    def keys(self, L: Optional[float] = None) -> list:
        L = self.cutoff if L is None else L
        return sorted({r.key for r in self.records if r.period <= L + PERIOD_TOL})

    @property
    def simple_records(self) -> list:
        return [r for r in self.records if r.simple]

    @property
    def levels(self) -> list:
        return sorted({r.period for r in self.records if r.period <= self.complete_to + PERIOD_TOL})

    def merge(self, other: "Census") -> "Census":
        """Disjoint union."""
        return Census(
            f"{self.substrate}+{other.substrate}",
            min(self.cutoff, other.cutoff),
            _sorted(self.records + other.records),
            min(self.complete_to, other.complete_to),
            None,
            {"parts": [self.substrate, other.substrate]},
        )

    def scaled(self, factor: float) -> "Census":
        """Every period, the cutoff and the completeness bound multiplied by `factor`."""
        if factor <= 0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        return Census(self.substrate, self.cutoff * factor,
                      [replace(r, period=r.period * factor) for r in self.records],
                      self.complete_to * factor, self.matrix, dict(self.description, scale=factor))

    def to_frame(self, simple_only: bool = False) -> pd.DataFrame:
        rows = [r.to_dict() for r in (self.simple_records if simple_only else self.records)]
        return pd.DataFrame(rows, columns=list(_RECORD_COLUMNS))

    def to_json_lines(self, path, simple_only: bool = False) -> None:
        self.to_frame(simple_only).to_json(path, orient="records", lines=True)


_RECORD_COLUMNS = ("period", "type", "kind", "prongs", "rotation", "substrate", "k", "rep",
                   "multiplicity", "lefschetz", "grading", "good", "root_k", "root_rep", "point")


def _sorted(records: Iterable[OrbitRecord]) -> list:
    return sorted(records, key=lambda r: (r.period, r.key, r.multiplicity, r.point))


# ---------------------------------------------------------------------------
# Exact lattice arithmetic
# ---------------------------------------------------------------------------

def _mat_vec(m, v) -> tuple:
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


def _minus_identity(m) -> tuple:
    return ((m[0][0] - 1, m[0][1]), (m[1][0], m[1][1] - 1))


@dataclass(frozen=True)
class _Level:
    """Smith data of Aᵏ − I and the induced A-action on coset labels."""

    k: int
    M: tuple
    P: tuple
    Q: tuple
    divisors: tuple
    action: tuple

    @classmethod
    def of(cls, A: TorusAutomorphism, k: int) -> "_Level":
        M = _minus_identity(A.power(k))
        snf = smith_normal_form(M)
        P = snf.P
        action = mat_mul(mat_mul(P, A.matrix), unimodular_inverse(P))
        return cls(k, M, P, snf.Q, snf.divisors, action)

    @property
    def size(self) -> int:
        return self.divisors[0] * self.divisors[1]

    def label(self, w) -> tuple:
        u = _mat_vec(self.P, w)
        return (u[0] % self.divisors[0], u[1] % self.divisors[1])

    def act(self, u) -> tuple:
        v = _mat_vec(self.action, u)
        return (v[0] % self.divisors[0], v[1] % self.divisors[1])

    def orbit(self, u) -> list:
        seen = [u]
        nxt = self.act(u)
        while nxt != u:
            seen.append(nxt)
            nxt = self.act(nxt)
        return seen

    def lift(self, u) -> tuple:
        """An integer w with label(w) = u."""
        return _mat_vec(unimodular_inverse(self.P), u)

    def point(self, w) -> tuple:
        """Exact x = M⁻¹w mod 1, a fixed point of Aᵏ on 𝕋²."""
        (a, b), (c, d) = self.M
        det = a * d - b * c
        x = (Fraction(d * w[0] - b * w[1], det), Fraction(-c * w[0] + a * w[1], det))
        return (x[0] % 1, x[1] % 1)


def class_key(v, k: int, A) -> HomotopyClassKey:
    """Canonical key of the orbit class (v, k) in ℤ² ⋊_A ℤ.

    Raises:
        LatticeOverflow: Aᵏ leaves the signed 63-bit range.
    """
    A = TorusAutomorphism.coerce(A)
    if k < 1:
        raise ValueError(f"winding must be >= 1, got {k}")
    level = _Level.of(A, int(k))
    u = level.label((int(v[0]), int(v[1])))
    return HomotopyClassKey(A.label, int(k), min(level.orbit(u)))


def _simple_type(A: TorusAutomorphism, d: int) -> OrbitType:
    (a, _), (_, e) = A.power(d)
    return OrbitType("positive_hyperbolic" if a + e > 0 else "negative_hyperbolic")


def _level_records(A: TorusAutomorphism, k: int) -> list:
    level = _Level.of(A, k)
    d1, d2 = level.divisors
    if level.size > COSET_WARNING:
        logger.warning("level %d of %s has %d cosets", k, A.label, level.size)
    seen: set = set()
    records = []
    for u1 in range(d1):
        for u2 in range(d2):
            u = (u1, u2)
            if u in seen:
                continue
            orbit = level.orbit(u)
            seen.update(orbit)
            d = len(orbit)
            rep = min(orbit)
            key = HomotopyClassKey(A.label, k, rep)
            x = level.point(level.lift(rep))
            m = k // d
            if m == 1:
                root = key
            else:
                M_d = _minus_identity(A.power(d))
                w_d = tuple(M_d[i][0] * x[0] + M_d[i][1] * x[1] for i in range(2))
                if any(c.denominator != 1 for c in w_d):  # pragma: no cover - algebra guarantees integers
                    raise ArithmeticError("periodic point does not close at its primitive period")
                root = class_key((int(w_d[0]), int(w_d[1])), d, A)
            records.append(OrbitRecord.build(float(k), _simple_type(A, d), key, m, root,
                                             (float(x[0]), float(x[1]))))
    logger.debug("level %d of %s: %d cosets, %d orbits", k, A.label, level.size, len(records))
    return records


def enumerate_torus_census(A, k_max: int, workers: Optional[int] = None) -> Census:
    """All closed orbits of the unit suspension of A with period ≤ k_max.

    Raises:
        ValueError: det A ≠ +1, or k_max outside 1..20.
        LatticeOverflow: powers of A leave the signed 63-bit range.
    """
    A = TorusAutomorphism.coerce(A)
    if A.det != 1:
        raise ValueError(f"censuses need an orientation-preserving automorphism (det = {A.det})")
    if not 1 <= int(k_max) <= MAX_LEVEL:
        raise ValueError(f"k_max must be between 1 and {MAX_LEVEL}, got {k_max}")
    levels = parallel_map(lambda k: _level_records(A, k), range(1, int(k_max) + 1), workers)
    records = _sorted(r for recs in levels for r in recs)
    logger.info("census %s to k=%d: %d records (%d simple)", A.label, k_max, len(records),
                sum(r.simple for r in records))
    return Census(A.label, float(k_max), records, float(k_max), A.matrix,
                  {"matrix": [list(row) for row in A.matrix], "kmax": int(k_max)})


def _record_from_dict(d: dict) -> OrbitRecord:
    otype = OrbitType.from_dict(d["type"])
    key = HomotopyClassKey.from_dict(d.get("class", d))
    root = HomotopyClassKey.from_dict(d["root"]) if d.get("root") else None
    return OrbitRecord.build(float(d["period"]), otype, key, int(d.get("multiplicity", 1)), root,
                             tuple(d.get("point", ())))


def synthetic_census(records: Sequence, cutoff: float, substrate: str = SYNTHETIC) -> Census:
    """Census from explicit records (OrbitRecord or dicts with period/type/k/rep)."""
    recs = [r if isinstance(r, OrbitRecord) else _record_from_dict(r) for r in records]
    over = [r for r in recs if r.period > cutoff + PERIOD_TOL]
    if over:
        raise ValueError(f"{len(over)} record(s) exceed the cutoff {cutoff}")
    return Census(substrate, float(cutoff), _sorted(recs), float(cutoff))


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------

def growth_function(c: Census, L: float) -> int:
    """Number of distinct classes among orbits with period ≤ L.

    Raises:
        IncompleteCensus: L beyond the census completeness bound.
    """
    c.require_complete(L)
    return len({r.key for r in c.records if r.period <= L + PERIOD_TOL})


def fit_rate(L_values, counts, prefactor: str = "margulis") -> float:
    """Least-squares slope of log(L·N(L)) (or log N(L)) over the upper half of the range."""
    L_arr = np.asarray(L_values, dtype=float)
    N = np.asarray(counts, dtype=float)
    if len(L_arr) < MIN_GROWTH_LEVELS:
        raise InsufficientRange(f"need at least {MIN_GROWTH_LEVELS} levels, got {len(L_arr)}")
    if prefactor not in ("margulis", "none"):
        raise ValueError(f"unknown prefactor '{prefactor}'")
    upper = slice(len(L_arr) // 2, None)
    x, n = L_arr[upper], N[upper]
    if np.any(n <= 0):
        raise InsufficientRange("growth counts vanish in the fitted range")
    y = np.log(n) + (np.log(x) if prefactor == "margulis" else 0.0)
    return float(np.polyfit(x, y, 1)[0])


def growth_rate(c: Census, prefactor: str = "margulis") -> float:
    """Exponential growth rate of the class count.

    Raises:
        InsufficientRange: fewer than 8 complete levels.
    """
    levels = c.levels
    return fit_rate(levels, [growth_function(c, L) for L in levels], prefactor)


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------

def classify_types(types: Sequence[OrbitType]) -> Optional[str]:
    """Trichotomy pattern of a class: 1a, 1b, 1c, 'empty', or None if mixed."""
    if not types:
        return "empty"
    if len(types) == 1 and types[0].kind == "negative_hyperbolic":
        return "1b"
    if len(types) == 1 and types[0].is_rotating:
        return "1c"
    if all(t.kind in ("positive_hyperbolic", "nonrotating_singular") for t in types):
        return "1a"
    return None


@dataclass
class CensusCheckReport:
    passed: bool
    powers_checked: int
    missing_roots: list
    violations: list
    power_check_skipped: bool = False

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "powers_checked": self.powers_checked,
            "missing_roots": self.missing_roots,
            "violations": self.violations,
            "power_check_skipped": self.power_check_skipped,
        }


def _power_root(A: TorusAutomorphism, key: HomotopyClassKey, m: int) -> Optional[HomotopyClassKey]:
    """Root class if (w, k) is an m-th power (v, k/m)^m at the lattice level, else None."""
    j = key.k // m
    level = _Level.of(A, key.k)
    w = level.lift(key.rep)
    Aj = A.power(j)
    S = ((1, 0), (0, 1))
    term = ((1, 0), (0, 1))
    for _ in range(m - 1):
        term = mat_mul(term, Aj)
        S = ((S[0][0] + term[0][0], S[0][1] + term[0][1]), (S[1][0] + term[1][0], S[1][1] + term[1][1]))
    snf = smith_normal_form(S)
    d1, d2 = snf.divisors
    pw = _mat_vec(snf.P, w)
    if pw[0] % d1 or pw[1] % d2:
        return None
    y = _mat_vec(snf.Q, (pw[0] // d1, pw[1] // d2))
    return class_key(y, j, A)


def census_property_checks(c: Census) -> CensusCheckReport:
    """(i) occupied power classes have occupied roots; (ii) primitive classes fit the trichotomy."""
    c.require_complete(c.cutoff)
    occupied = {r.key for r in c.records}
    missing, checked = [], 0
    skipped = c.matrix is None
    if not skipped:
        A = TorusAutomorphism(c.matrix)
        for key in sorted(occupied):
            for m in range(2, key.k + 1):
                if key.k % m:
                    continue
                root = _power_root(A, key, m)
                if root is None:
                    continue
                checked += 1
                if root not in occupied:
                    missing.append({"class": key.to_dict(), "power": m, "root": root.to_dict()})

    by_key: dict = {}
    for r in c.simple_records:
        by_key.setdefault(r.key, []).append(r.type)
    violations = [{"class": key.to_dict(), "types": [t.label for t in types]}
                  for key, types in sorted(by_key.items()) if classify_types(types) is None]
    passed = not missing and not violations
    logger.info("census checks %s: %d power relations, %d violations", c.substrate, checked, len(violations))
    return CensusCheckReport(passed, checked, missing, violations, skipped)
