# -*- coding: utf-8 -*-
"""
reebpa/performance_monitor.py

Acceptance benchmark gate.

Time targets (seconds):
  lefschetz_table        < 1.0
  rel_lefschetz          < 1.0
  census_counts          < 5.0    (cat map k ≤ 8, random maps k ≤ 4)
  growth_rate            < 10.0   (cat map, k ≤ 12)
  smoothing_formulas     < 30.0
  contact_existence      < 30.0
  flux_exponent          < 5.0
  tracking               < 60.0
  torsion_model          < 5.0
  euler_identity         < 1.0
  hypertight_cofinality  < 1.0

Usage:
    from reebpa.performance_monitor import PerformanceBenchmark
    results = PerformanceBenchmark().run_full_benchmark_suite()
    # every results['*']['status'] must be '✅ PASS'
"""

from __future__ import annotations

import logging
import math
import time
from typing import Optional

import numpy as np

from reebpa import fixtures
from reebpa.chain_toolkit import (
    CofinalSequence,
    build_chain_summary,
    ch_growth,
    cofinality_check,
    euler_identity_check,
    hypertight_certificate,
    torsion_rank_bound,
    torsion_tori,
)
from reebpa.flow_engine import ChartReebModel, Section
from reebpa.lefschetz_tracking import (
    OrbitType,
    PlanarMap,
    TrackedOrbit,
    TrackingOptions,
    perturbed_map,
    rel_lefschetz_check,
    tracking_certificate,
    tracking_sum_check,
    winding_index,
)
from reebpa.local_models import StandardPAMap, TorusAutomorphism, count_fixed_points
from reebpa.orbit_census import (
    HomotopyClassKey,
    OrbitRecord,
    enumerate_torus_census,
    growth_rate,
    synthetic_census,
)
from reebpa.singular_contact import (
    GridSpec,
    find_epsilon,
    flux_exponent,
    reeb_field,
    volume_inequality_check,
)

logger = logging.getLogger(__name__)

CAT_MAP = ((2, 1), (1, 1))
CAT_RATE = math.log((3.0 + math.sqrt(5.0)) / 2.0)

# ---------------------------------------------------------------------------
# Hard performance targets (seconds)
# ---------------------------------------------------------------------------
BENCHMARKS = {
    "lefschetz_table": 1.0,
    "rel_lefschetz": 1.0,
    "census_counts": 5.0,
    "growth_rate": 10.0,
    "smoothing_formulas": 30.0,
    "contact_existence": 30.0,
    "flux_exponent": 5.0,
    "tracking": 60.0,
    "torsion_model": 5.0,
    "euler_identity": 1.0,
    "hypertight_cofinality": 1.0,
}

QUICK = ("lefschetz_table", "rel_lefschetz", "census_counts", "growth_rate", "flux_exponent",
         "torsion_model", "euler_identity", "hypertight_cofinality")


# ---------------------------------------------------------------------------
# Synthetic data generators
# ---------------------------------------------------------------------------

def random_hyperbolic_matrix(rng: np.random.Generator, max_entry: int = 4) -> tuple:
    """A random SL(2, ℤ) matrix with |trace| > 2."""
    while True:
        a, b, c = (int(v) for v in rng.integers(-max_entry, max_entry + 1, 3))
        if a == 0 or (1 + b * c) % a:
            continue
        d = (1 + b * c) // a
        if abs(a + d) > 2:
            return ((a, b), (c, d))


def random_primitive_class(rng: np.random.Generator, bound: int = 50) -> tuple[int, int]:
    while True:
        m, n = (int(v) for v in rng.integers(-bound, bound + 1, 2))
        if math.gcd(abs(m), abs(n)) == 1:
            return m, n


def hyp_tracking_setup() -> tuple:
    """(Φ, Ψ, orbits, L) for the smooth hyperbolic core orbit."""
    form = fixtures.load_form("hyp")
    chart = fixtures.load_chart("hyp")
    phi = ChartReebModel(form, chart, None)
    psi = ChartReebModel(form, chart, fixtures.load_profile("hyp"))
    section = Section.for_model(phi, 0.0, r_max=0.5, r_p=0.3)
    return phi, psi, [TrackedOrbit("core", section, 1.0, 1, 0.12)], 2.0


def _status(ok: bool, elapsed: float, target: float) -> str:
    return "✅ PASS" if ok and elapsed <= target else "❌ FAIL"


# ---------------------------------------------------------------------------
# Benchmark runner
# ---------------------------------------------------------------------------

class PerformanceBenchmark:
    """Acceptance checks with wall-clock targets.

    All methods return a result dict with:
        status:  '✅ PASS' or '❌ FAIL'
        elapsed: measured time in seconds
        target:  target time in seconds
    """

    def __init__(self, seed: int = 0, workers: Optional[int] = None):
        self.seed = seed
        self.workers = workers

    def _timed(self, name: str, fn) -> dict:
        start = time.perf_counter()
        try:
            ok, extra = fn()
        except Exception as exc:  # counts as a failed gate
            logger.exception("benchmark %s raised", name)
            ok, extra = False, {"error": f"{type(exc).__name__}: {exc}"}
        elapsed = time.perf_counter() - start
        target = BENCHMARKS[name]
        return dict({"status": _status(ok, elapsed, target), "elapsed": round(elapsed, 3),
                     "target": target}, **extra)

    def validate_lefschetz_table(self) -> dict:
        def run():
            got = {
                "A_2": winding_index(PlanarMap.a_lambda(2.0)),
                "neg_hyperbolic": winding_index(PlanarMap.linear([[-2.0, 0.0], [0.0, -0.5]])),
                "rotation": winding_index(PlanarMap.linear([[0.0, -1.0], [1.0, 0.0]])),
            }
            expected = {"A_2": -1, "neg_hyperbolic": 1, "rotation": 1}
            for p in (3, 4, 5):
                for lam in (1.5, 2.0):
                    name = f"pa_{p}_{lam:g}"
                    got[name] = winding_index(PlanarMap.standard_pa(StandardPAMap(p, 0, lam)))
                    expected[name] = 1 - p
            return got == expected, {"indices": got}
        return self._timed("lefschetz_table", run)

    def validate_rel_lefschetz(self) -> dict:
        def run():
            m1 = PlanarMap.standard_pa(StandardPAMap(4, 0, 2.0))
            m2 = perturbed_map(m1, (0.01, 0.0), radius=0.5)
            rep = rel_lefschetz_check(m1, m2, 0.5)
            return rep.passed and len(rep.fixed_second) == 3, {"sums": [rep.sum_first, rep.sum_second]}
        return self._timed("rel_lefschetz", run)

    def validate_census_counts(self, k_max: int = 8, random_matrices: int = 3) -> dict:
        def run():
            rng = np.random.default_rng(self.seed)
            cases = [(CAT_MAP, k_max)] + [(random_hyperbolic_matrix(rng), 4) for _ in range(random_matrices)]
            ok = True
            totals = {}
            for matrix, levels in cases:
                A = TorusAutomorphism(matrix)
                census = enumerate_torus_census(A, levels, self.workers)
                counts = {k: sum(k // r.multiplicity for r in census.records if r.period == k)
                          for k in range(1, levels + 1)}
                ok &= all(counts[k] == count_fixed_points(A, k) for k in counts)
                totals[A.label] = counts
            return ok, {"totals": totals}
        return self._timed("census_counts", run)

    def validate_growth_rate(self, k_max: int = 12) -> dict:
        def run():
            census = enumerate_torus_census(CAT_MAP, k_max, self.workers)
            rate = growth_rate(census)
            _, ch_rate = ch_growth(census, workers=self.workers)
            ok = abs(rate - CAT_RATE) <= 0.05 * CAT_RATE and abs(ch_rate - rate) < 1e-9
            return ok, {"rate": rate, "ch_rate": ch_rate, "expected": CAT_RATE}
        return self._timed("growth_rate", run)

    def validate_smoothing_formulas(self) -> dict:
        def run():
            grid = GridSpec(32, 32, 32, r_min=0.05, delta=0.05)
            t, r, th = grid.mesh()
            worst = {}
            ok = True
            for name in ("std", "bp"):
                res = reeb_field(fixtures.load_form(name), fixtures.load_chart(name),
                                 fixtures.load_profile(name).scaled(0.25), (t, r, th))
                worst[name] = [res.residual_alpha, res.residual_iota]
                ok &= res.residual_alpha < 1e-9 and res.residual_iota < 1e-7
                if name == "bp":
                    ok &= float(np.max(np.abs(res.r_dot))) < 1e-9 and float(np.max(np.abs(res.theta_dot))) < 1e-9
            return bool(ok), {"residuals": worst}
        return self._timed("smoothing_formulas", run)

    def validate_contact_existence(self) -> dict:
        def run():
            grid = GridSpec(16, 32, 32)
            found = {}
            ok = True
            for name in ("std", "bp"):
                form, chart, chi = (fixtures.load_form(name), fixtures.load_chart(name),
                                    fixtures.load_profile(name))
                cert = find_epsilon(form, chart, chi, grid)
                half = volume_inequality_check(form, chart, chi.scaled(cert.epsilon / 2.0), 0.9, grid)
                found[name] = cert.epsilon
                ok &= cert.report.axis_slope is not None and cert.report.axis_slope > 0 and half.passed
            return bool(ok), {"epsilon": found}
        return self._timed("contact_existence", run)

    def validate_flux_exponent(self) -> dict:
        def run():
            slope = flux_exponent(fixtures.load_form("bp"))
            return slope >= 1.9, {"exponent": slope}
        return self._timed("flux_exponent", run)

    def validate_tracking(self) -> dict:
        def run():
            phi, psi, orbits, L = hyp_tracking_setup()
            rep = tracking_certificate(phi, psi, orbits, L, TrackingOptions(workers=self.workers))
            phi4, psi4 = fixtures.load_census("prong4_phi"), fixtures.load_census("prong4_psi")
            sums = tracking_sum_check(phi4, psi4, HomotopyClassKey("synthetic", 1, (0, 0)), 2.0)
            return rep.passed and sums.passed, {"failed_at": rep.failed_at, "sums": sums.to_dict()}
        return self._timed("tracking", run)

    def validate_torsion_model(self, n_classes: int = 200) -> dict:
        def run():
            rng = np.random.default_rng(self.seed)
            ok = True
            for _ in range(n_classes):
                cls = random_primitive_class(rng)
                for k in (1, 2, 3):
                    tori = torsion_tori(k, cls)
                    ok &= len(tori) == k and all(0.0 <= t < k for t in tori)
                    bound = torsion_rank_bound(k, cls)
                    ok &= len(bound["generators"]) == 2 * k
                    ok &= abs(bound["action"] - math.hypot(*cls)) <= 1e-12
            return bool(ok), {"classes": n_classes}
        return self._timed("torsion_model", run)

    def validate_euler_identity(self) -> dict:
        def run():
            outcomes = {}
            for case in fixtures.euler_suite():
                recs = [OrbitRecord.build(1.0 + 0.01 * i, OrbitType("positive_hyperbolic"),
                                          HomotopyClassKey("synthetic", 1, (0, 0)))
                        for i in range(case["psi"])]
                summary = build_chain_summary(synthetic_census(recs, 2.0), recs[0].key, 2.0)
                outcomes[case["name"]] = euler_identity_check(summary, case["phi"]).passed == case["pass"]
            return all(outcomes.values()), {"cases": outcomes}
        return self._timed("euler_identity", run)

    def validate_hypertight_cofinality(self) -> dict:
        def run():
            census = enumerate_torus_census(CAT_MAP, 4, self.workers)
            tight = hypertight_certificate(census, 4.0).passed
            c = (1.0, 1.1, 0.9, 1.0, 1.05)
            good = cofinality_check(CofinalSequence(c, tuple(5.0 ** i for i in range(1, 6)), 1.2, 2.0))
            bad = cofinality_check(CofinalSequence(c, tuple(5.0 ** i for i in range(1, 6)), 1.2, 1.3))
            ok = tight and good.passed and not bad.passed and bad.failing_index == 2
            return ok, {"failing_index": bad.failing_index}
        return self._timed("hypertight_cofinality", run)

    def run_full_benchmark_suite(self, quick: bool = False) -> dict:
        """Run every benchmark (or only the fast ones) and print the gate report.

        Returns:
            Dict of benchmark_name → result dict, plus '_gate'.
        """
        print(f"\n{'='*60}")
        print("  reebpa: Acceptance Benchmark Suite")
        print(f"  Mode: {'quick' if quick else 'full'}")
        print(f"{'='*60}\n")

        results = {}
        for name in BENCHMARKS:
            if quick and name not in QUICK:
                continue
            print(f"Running {name} (target < {BENCHMARKS[name]}s)...")
            r = getattr(self, f"validate_{name}")()
            results[name] = r
            print(f"  {r['status']}  {r.get('elapsed', '?')}s")

        print(f"\n{'='*60}")
        all_pass = all(v["status"].startswith("✅") for v in results.values())
        gate_status = "✅ ACCEPTANCE GATE: PASSED" if all_pass else "❌ ACCEPTANCE GATE: FAILED"
        print(f"  {gate_status}")
        print(f"{'='*60}\n")
        results["_gate"] = {"status": gate_status, "pass": all_pass, "quick": quick}
        return results
