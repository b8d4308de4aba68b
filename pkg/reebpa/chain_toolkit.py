# -*- coding: utf-8 -*-
"""
reebpa/chain_toolkit.py

Generator-count bookkeeping for contact homology in a fixed free homotopy
class: graded counts, the Euler-characteristic identity, nonvanishing and
hypertightness certificates, strongly cofinal sequences, the Giroux-torsion
model, and CH growth tables.

Nothing here computes a differential. Certificates are counting arguments
over censuses.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from reebpa.errors import CaseMismatch, InsufficientRange, MixedClass, NonPrimitive
from reebpa.flow_engine import TorsionModel, integrate, wrap_displacement
from reebpa.orbit_census import (
    PERIOD_TOL,
    Census,
    HomotopyClassKey,
    classify_types,
    fit_rate,
    growth_function,
    growth_rate,
)
from reebpa.workers import parallel_map

logger = logging.getLogger(__name__)

TORSION_CLOSURE_TOL = 1e-8
DEFAULT_MARGIN = 0.05


# ---------------------------------------------------------------------------
# Chain summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainSummary:
    key: HomotopyClassKey
    L: float
    n_even: int
    n_odd: int
    case: str

    @property
    def chi(self) -> int:
        return self.n_even - self.n_odd

    def to_dict(self) -> dict:
        return {"class": self.key.to_dict(), "L": self.L, "n_even": self.n_even, "n_odd": self.n_odd,
                "chi": self.chi, "case": self.case}


def build_chain_summary(c: Census, key: HomotopyClassKey, L: float) -> ChainSummary:
    """Count good generators of class `key` up to action L by grading.

    Raises:
        IncompleteCensus: census not complete up to L.
        MixedClass: generator types fit none of the three patterns.
    """
    c.require_complete(L)
    good = [r for r in c.records_in(key, L) if r.good]
    types = [r.cover_type for r in good]
    case = classify_types(types)
    if case is None:
        raise MixedClass(key.to_dict(), [t.label for t in types])
    n_even = sum(1 for r in good if r.grading == 0)
    return ChainSummary(key, float(L), n_even, len(good) - n_even, case)


def chain_summaries(c: Census, L: float, workers: Optional[int] = None) -> list[ChainSummary]:
    """Summaries of every class occupied up to L, in key order."""
    return parallel_map(lambda k: build_chain_summary(c, k, L), c.keys(L), workers)


@dataclass
class EulerReport:
    passed: bool
    chi: int
    expected: int
    signed_lefschetz: int

    @property
    def difference(self) -> int:
        return abs(self.chi) - self.expected

    def to_dict(self) -> dict:
        return {"pass": self.passed, "chi": self.chi, "expected": self.expected,
                "signed_lefschetz": self.signed_lefschetz, "difference": self.difference}


def euler_identity_check(summary_psi: ChainSummary, orbits_phi: Sequence) -> EulerReport:
    """|χ(Ψ-generators)| against Σ (p_η − 1) over the Φ-orbits of the class.

    The signed Φ-side sum Σ Lef = Σ (1 − p_η) is reported alongside.

    Raises:
        CaseMismatch: summary not case 1a, or a Φ-orbit is rotating or negative hyperbolic.
    """
    if summary_psi.case != "1a":
        raise CaseMismatch(f"Euler identity needs a case 1a summary, got '{summary_psi.case}'")
    types = [getattr(o, "type", o) for o in orbits_phi]
    bad = [t.label for t in types if t.kind not in ("positive_hyperbolic", "nonrotating_singular")]
    if bad:
        raise CaseMismatch(f"Φ-orbits must be positive hyperbolic or non-rotating singular, got {bad}")
    expected = sum(t.prongs - 1 for t in types)
    return EulerReport(abs(summary_psi.chi) == expected, summary_psi.chi, expected, -expected)


def nonvanishing_certificate(s: ChainSummary) -> dict:
    if s.case == "empty":
        return {"nonzero": False, "rank_lower_bound": 0}
    if s.case in ("1b", "1c"):
        return {"nonzero": True, "rank_lower_bound": 1}
    bound = abs(s.chi)
    return {"nonzero": bound >= 1, "rank_lower_bound": bound}


@dataclass
class HypertightReport:
    passed: bool
    L: float
    offenders: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "L": self.L, "offenders": self.offenders}


def hypertight_certificate(c: Census, L: float) -> HypertightReport:
    """No contractible orbit with period ≤ L."""
    c.require_complete(L)
    offenders = [r.to_dict() for r in c.records if r.key.contractible and r.period <= L + PERIOD_TOL]
    return HypertightReport(not offenders, float(L), offenders)


def filtration_check(c: Census, key: HomotopyClassKey, L_values: Sequence[float]) -> dict:
    """Persistence of the certificate as the action cutoff grows.

    1b/1c: once nonzero, nonzero at every larger cutoff. 1a: |χ| never decreases.
    """
    L_values = sorted(float(v) for v in L_values)
    summaries = [build_chain_summary(c, key, L) for L in L_values]
    certs = [nonvanishing_certificate(s) for s in summaries]
    ok = True
    for i in range(1, len(summaries)):
        prev, cur = summaries[i - 1], summaries[i]
        if prev.case in ("1b", "1c") and certs[i - 1]["nonzero"] and not certs[i]["nonzero"]:
            ok = False
        if prev.case == "1a" and cur.case == "1a" and abs(cur.chi) < abs(prev.chi):
            ok = False
    return {
        "pass": ok,
        "class": key.to_dict(),
        "steps": [dict(s.to_dict(), **cert) for s, cert in zip(summaries, certs)],
    }


# ---------------------------------------------------------------------------
# Cofinality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CofinalSequence:
    """Scalar surrogates c_i·β ≤ α_i ≤ C·β with actions L_i."""

    c: tuple
    L: tuple
    C: float
    D: float

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        object.__setattr__(self, "L", tuple(float(v) for v in self.L))
        if not self.D > self.C > 1.0:
            raise ValueError(f"need D > C > 1, got C={self.C}, D={self.D}")
        if len(self.c) != len(self.L):
            raise ValueError("c and L must have the same length")


@dataclass
class CofinalityReport:
    passed: bool
    failing_index: Optional[int]
    failed_condition: Optional[str]
    bounds: list

    def to_dict(self) -> dict:
        return {"pass": self.passed, "failing_index": self.failing_index,
                "failed_condition": self.failed_condition, "bounds": self.bounds}


def cofinality_check(seq: CofinalSequence) -> CofinalityReport:
    """Check the strong-cofinality conditions and the certified domination bound.

    B_i = (c_1/L_1)(C²/D)^(i−1) must decrease strictly and dominate c_i/L_i.
    Indices in the report are 1-based.
    """
    n = len(seq.c)
    if n < 3:
        raise ValueError(f"a cofinal sequence needs at least 3 terms, got {n}")
    C, D = seq.C, seq.D
    ratio = C * C / D
    bounds = [seq.c[0] / seq.L[0] * ratio ** i for i in range(n)]

    def fail(i: int, what: str) -> CofinalityReport:
        logger.info("cofinality fails at i=%d: %s", i, what)
        return CofinalityReport(False, i, what, bounds)

    for i in range(n):
        if not 1.0 / C <= seq.c[i] <= C:
            return fail(i + 1, "c_i outside [1/C, C]")
        if i == 0:
            continue
        if seq.c[i] > C * C * seq.c[i - 1]:
            return fail(i + 1, "c_i > C^2 c_(i-1)")
        if not seq.L[i] > D * D * seq.L[i - 1]:
            return fail(i + 1, "L_i <= D^2 L_(i-1)")
        if not bounds[i] < bounds[i - 1]:
            return fail(i + 1, "bound does not decrease (D <= C^2)")
        if seq.c[i] / seq.L[i] > bounds[i]:
            return fail(i + 1, "c_i/L_i exceeds the certified bound")
        if not seq.c[i - 1] / seq.L[i - 1] > seq.c[i] / seq.L[i]:
            return fail(i + 1, "morphism chain c_i/L_i not decreasing")
    return CofinalityReport(True, None, None, bounds)


def cofinal_constants(gray: float, margin: float = DEFAULT_MARGIN) -> tuple[float, float]:
    """(C, D) admissible for a Gray-stability bound."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    C = math.exp(gray) * (1.0 + margin)
    return C, C * C * (1.0 + margin)


def cofinal_sequence(C: float, D: float, L1: float = 1.0, n: int = 5, margin: float = DEFAULT_MARGIN,
                     c: Optional[Sequence[float]] = None) -> CofinalSequence:
    L = [float(L1)]
    for _ in range(n - 1):
        L.append(L[-1] * D * D * (1.0 + margin))
    return CofinalSequence(tuple(c) if c is not None else (1.0,) * n, tuple(L), C, D)


# ---------------------------------------------------------------------------
# Giroux torsion
# ---------------------------------------------------------------------------

def _check_primitive(cls) -> tuple[int, int]:
    m, n = (int(v) for v in cls)
    if math.gcd(abs(m), abs(n)) != 1:
        raise NonPrimitive(f"class ({m},{n}) is not primitive")
    return m, n


def torsion_tori(k: int, cls) -> list[float]:
    """Parameters t* ∈ [0, k) where the torsion Reeb direction is parallel to (m, n).

    Raises:
        NonPrimitive: gcd(|m|, |n|) ≠ 1.
    """
    if k < 1:
        raise ValueError(f"torsion must be >= 1, got {k}")
    m, n = _check_primitive(cls)
    base = (math.atan2(n, m) / (2.0 * math.pi)) % 1.0
    return [base + j for j in range(int(k))]


def torsion_rank_bound(k: int, cls) -> dict:
    """Two generators per Morse–Bott torus and the rank bound 2k."""
    m, n = _check_primitive(cls)
    action = math.hypot(m, n)
    generators = []
    for j, t in enumerate(torsion_tori(k, (m, n))):
        generators.append({"label": f"hat_{j}", "t": t, "parity": 1, "action": action})
        generators.append({"label": f"check_{j}", "t": t, "parity": 0, "action": action})
    return {
        "class": [m, n],
        "k": int(k),
        "generators": generators,
        "bound": 2 * int(k),
        "action": action,
        "theta": m,
        "hypothesis_holds": m <= 0,
    }


def verify_torsion_orbits(k: int, cls, tol: float = 1e-10) -> dict:
    """Integrate the torsion Reeb field from each torus and check closure at time √(m²+n²)."""
    m, n = _check_primitive(cls)
    model = TorsionModel(k)
    T = math.hypot(m, n)
    start = (0.1, 0.2)
    results = []
    for t in torsion_tori(k, (m, n)):
        traj = integrate(model, (t, start[0], start[1]), T, tol)
        end = np.asarray(traj.end, dtype=float)
        raw = end[1:] - np.asarray(start)
        gap = float(np.max(np.abs(wrap_displacement(raw, 1.0))))
        results.append({"t": t, "displacement": [float(v) for v in raw], "gap": gap,
                        "closed": gap < TORSION_CLOSURE_TOL and abs(end[0] - t) < TORSION_CLOSURE_TOL})
    return {"pass": all(r["closed"] for r in results), "action": T, "tori": results}


# ---------------------------------------------------------------------------
# CH growth
# ---------------------------------------------------------------------------

def ch_growth(c: Census, L_values: Optional[Sequence[float]] = None, prefactor: str = "margulis",
              workers: Optional[int] = None) -> tuple[pd.DataFrame, Optional[float]]:
    """GF and CHF tables with the CH growth-rate estimate.

    CHF(L) counts classes occupied up to L whose primitive root class is
    certified nonzero at cutoff L. The rate is None below 8 levels.
    """
    L_values = sorted(c.levels if L_values is None else (float(v) for v in L_values))

    def row(L):
        cache: dict = {}
        count = 0
        for key in c.keys(L):
            roots = sorted({r.root or r.key for r in c.records_in(key, L)})
            for root in roots:
                if root not in cache:
                    cache[root] = nonvanishing_certificate(build_chain_summary(c, root, L))["nonzero"]
                if cache[root]:
                    count += 1
                    break
        return {"L": L, "GF": growth_function(c, L), "CHF": count}

    frame = pd.DataFrame(parallel_map(row, L_values, workers), columns=["L", "GF", "CHF"])
    try:
        rate = fit_rate(frame["L"].to_numpy(), frame["CHF"].to_numpy(), prefactor)
    except InsufficientRange as exc:
        logger.info("CH growth rate not fitted: %s", exc)
        rate = None
    return frame, rate


def growth_comparison(c: Census, C: float = 1.0, prefactor: str = "margulis") -> dict:
    """CHGr ≥ C⁻¹·Gr on a census."""
    gr = growth_rate(c, prefactor)
    _, chgr = ch_growth(c, prefactor=prefactor)
    bound = gr / C
    return {"pass": chgr is not None and chgr >= bound - 1e-12, "gr": gr, "chgr": chgr, "bound": bound, "C": C}
