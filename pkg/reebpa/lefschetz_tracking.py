# -*- coding: utf-8 -*-
"""
reebpa/lefschetz_tracking.py

Fixed-point indices of planar maps, the orbit-type index table, relative
Lefschetz comparisons and the tracking certificate between two flows.

Indices are degrees of the normalized displacement y ↦ (m(y) − y)/|m(y) − y|
on a small circle, computed by accumulated angle with sample doubling.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from reebpa.errors import (
    Degenerate,
    DegenerateCircle,
    NoReturn,
    NonContactPoint,
    NonConvergence,
    StepFailure,
)
from reebpa.flow_engine import (
    FlowModel,
    Section,
    damped_newton,
    find_periodic_orbits,
    holonomy_map,
    integrate,
    return_map,
    wrap_displacement,
)
from reebpa.local_models import StandardPAMap, apply_A_lambda
from reebpa.singular_contact import smooth_step
from reebpa.workers import parallel_map

logger = logging.getLogger(__name__)

WINDING_MIN_SAMPLES = 64
WINDING_MAX_SAMPLES = 8192
WINDING_SHRINK_TRIES = 6
DISPLACEMENT_FLOOR = 1e-12
DET_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Planar maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarMap:
    """A map of the plane (or of 𝕋² when `period` is set) with a marked fixed point.

    `fn` takes an (..., 2) array; non-vectorized callables are looped.
    """

    fn: Callable
    fixed_point: tuple = (0.0, 0.0)
    vectorized: bool = True
    period: Optional[float] = None
    name: str = "map"

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.vectorized:
            return np.asarray(self.fn(pts), dtype=float)
        flat = pts.reshape(-1, 2)
        return np.array([self.fn(p) for p in flat], dtype=float).reshape(pts.shape)

    def displacement(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return wrap_displacement(self(pts) - pts, self.period)

    @classmethod
    def linear(cls, J, name: str = "linear") -> "PlanarMap":
        J = np.asarray(J, dtype=float)
        return cls(lambda p: p @ J.T, (0.0, 0.0), True, None, name)

    @classmethod
    def a_lambda(cls, lam: float) -> "PlanarMap":
        return cls(lambda p: apply_A_lambda(lam, p), (0.0, 0.0), True, None, f"A_{lam:g}")

    @classmethod
    def standard_pa(cls, m: StandardPAMap) -> "PlanarMap":
        return cls(m.apply_cartesian, (0.0, 0.0), True, None, f"pa({m.n},{m.k},{m.lam:g})")

    @classmethod
    def holonomy(cls, model: FlowModel, section: Section, k: int = 1, fixed_point=None,
                 tol: float = 1e-10) -> "PlanarMap":
        fp = section.center if fixed_point is None else tuple(float(v) for v in fixed_point)
        return cls(holonomy_map(model, section, k, tol=tol), fp, True, model.planar_period,
                   f"hol^{k}:{model.name}")


# ---------------------------------------------------------------------------
# Indices
# ---------------------------------------------------------------------------

def _winding_once(m: PlanarMap, center: np.ndarray, eps: float, n: int) -> int:
    ang = 2.0 * np.pi * np.arange(n) / n
    pts = center + eps * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    d = m.displacement(pts)
    if np.min(np.hypot(d[:, 0], d[:, 1])) < DISPLACEMENT_FLOOR:
        raise DegenerateCircle(eps)
    phi = np.arctan2(d[:, 1], d[:, 0])
    steps = np.diff(np.append(phi, phi[0]))
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(float(np.sum(steps)) / (2.0 * np.pi)))


def winding_index(m: PlanarMap, x=None, eps: float = 0.1, samples: int = WINDING_MIN_SAMPLES,
                  max_samples: int = WINDING_MAX_SAMPLES) -> int:
    """Degree of the normalized displacement of m on the ε-circle around x.

    Samples double from `samples` until two consecutive resolutions agree.
    A circle meeting another fixed point is shrunk (halved) up to 6 times.

    Raises:
        DegenerateCircle: displacement vanishes on every tried circle.
    """
    if samples < WINDING_MIN_SAMPLES:
        raise ValueError(f"need at least {WINDING_MIN_SAMPLES} samples")
    center = np.asarray(m.fixed_point if x is None else x, dtype=float)
    radius = float(eps)
    for _ in range(WINDING_SHRINK_TRIES + 1):
        try:
            n = samples
            prev = _winding_once(m, center, radius, n)
            while n < max_samples:
                n *= 2
                cur = _winding_once(m, center, radius, n)
                if cur == prev:
                    return cur
                prev = cur
            logger.warning("winding of %s at %s did not stabilize by %d samples", m.name, center, n)
            return prev
        except DegenerateCircle:
            logger.debug("degenerate circle radius %g around %s; shrinking", radius, center)
            radius *= 0.5
    raise DegenerateCircle(radius)


def nondegenerate_sign(J) -> int:
    """sign det(J − I).

    Raises:
        Degenerate: |det(J − I)| < 1e−12.
    """
    J = np.asarray(J, dtype=float)
    det = float(np.linalg.det(J - np.eye(2)))
    if abs(det) < DET_FLOOR:
        raise Degenerate(det)
    return 1 if det > 0 else -1


# ---------------------------------------------------------------------------
# Orbit types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class OrbitType:
    """Dynamical type of a closed orbit.

    kind ∈ KINDS; `prongs` is p for singular kinds (2 for smooth hyperbolic);
    `rotation` is the prong rotation k mod p for rotating singular orbits.
    """

    kind: str
    prongs: int = 2
    rotation: int = 0

    KINDS = ("positive_hyperbolic", "negative_hyperbolic", "elliptic",
             "rotating_singular", "nonrotating_singular")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown orbit type '{self.kind}'")
        if self.kind in ("rotating_singular", "nonrotating_singular"):
            if self.prongs < 2:
                raise ValueError("1-pronged orbits are excluded")
            if self.kind == "nonrotating_singular" and self.prongs == 2:
                object.__setattr__(self, "kind", "positive_hyperbolic")
                object.__setattr__(self, "rotation", 0)
                return
            if self.kind == "rotating_singular":
                rot = self.rotation % self.prongs
                if rot == 0:
                    object.__setattr__(self, "kind", "nonrotating_singular")
                object.__setattr__(self, "rotation", rot)
            else:
                object.__setattr__(self, "rotation", 0)
        else:
            object.__setattr__(self, "prongs", 2)
            object.__setattr__(self, "rotation", 0)

    @property
    def is_rotating(self) -> bool:
        return self.kind in ("elliptic", "rotating_singular")

    @property
    def label(self) -> str:
        if self.kind == "rotating_singular":
            return f"rotating_singular({self.prongs},{self.rotation})"
        if self.kind == "nonrotating_singular":
            return f"nonrotating_singular({self.prongs})"
        return self.kind

    def iterate(self, m: int) -> "OrbitType":
        """Type of the m-fold cover."""
        if self.kind == "negative_hyperbolic":
            return self if m % 2 else OrbitType("positive_hyperbolic")
        if self.kind == "rotating_singular":
            return OrbitType("rotating_singular", self.prongs, self.rotation * m)
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "prongs": self.prongs, "rotation": self.rotation}

    @classmethod
    def from_dict(cls, d) -> "OrbitType":
        if isinstance(d, OrbitType):
            return d
        if isinstance(d, str):
            return cls(d)
        return cls(d["kind"], int(d.get("prongs", 2)), int(d.get("rotation", 0)))


def positive_hyperbolic() -> OrbitType:
    return OrbitType("positive_hyperbolic")


def negative_hyperbolic() -> OrbitType:
    return OrbitType("negative_hyperbolic")


def elliptic() -> OrbitType:
    return OrbitType("elliptic")


def rotating_singular(p: int, k: int) -> OrbitType:
    return OrbitType("rotating_singular", p, k)


def nonrotating_singular(p: int) -> OrbitType:
    return OrbitType("nonrotating_singular", p)


def index_table(orbit_type: OrbitType) -> int:
    """Lefschetz index by type: +1 rotating or negative hyperbolic, 1 − p non-rotating."""
    if orbit_type.kind == "positive_hyperbolic":
        return -1
    if orbit_type.kind == "nonrotating_singular":
        return 1 - orbit_type.prongs
    return 1


def orbit_index(f: FlowModel, s: Section, x, k: int = 1, eps: float = 0.05) -> int:
    """Index of the fixed point x of Hol^k."""
    return winding_index(PlanarMap.holonomy(f, s, k, fixed_point=x), x, eps)


# ---------------------------------------------------------------------------
# Global sums
# ---------------------------------------------------------------------------

def locate_fixed_points(m: PlanarMap, radius: float, n: int = 15, center=(0.0, 0.0),
                        extra_seeds: Sequence = ()) -> list[tuple]:
    """Newton search for fixed points of m in the disk of given radius."""
    g = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(g + center[0], g + center[1], indexing="ij")
    seeds = [tuple(p) for p in np.stack([X.ravel(), Y.ravel()], axis=-1)
             if math.hypot(p[0] - center[0], p[1] - center[1]) <= radius]
    seeds = [tuple(float(v) for v in s) for s in extra_seeds] + seeds

    def residual(x):
        return m.displacement(np.asarray(x, dtype=float)[None, :])[0]

    found: list[tuple] = []
    for seed in seeds:
        try:
            x = damped_newton(residual, seed)
        except NonConvergence:
            continue
        if math.hypot(x[0] - center[0], x[1] - center[1]) > radius:
            continue
        if all(math.hypot(x[0] - q[0], x[1] - q[1]) > 1e-8 for q in found):
            found.append((float(x[0]), float(x[1])))
    return sorted(found)


def _winding_radius(points: list, default: float) -> list[float]:
    out = []
    for i, p in enumerate(points):
        others = [math.hypot(p[0] - q[0], p[1] - q[1]) for j, q in enumerate(points) if j != i]
        out.append(min([default] + [0.4 * d for d in others]))
    return out


def lefschetz_number(m: PlanarMap, fixed_points: Sequence, eps: float = 0.05) -> int:
    """Σ of winding indices over a located fixed-point set."""
    pts = [tuple(p) for p in fixed_points]
    return sum(winding_index(m, p, r) for p, r in zip(pts, _winding_radius(pts, eps)))


@dataclass
class RelLefschetzReport:
    passed: bool
    sum_first: int
    sum_second: int
    fixed_first: list
    fixed_second: list
    outside_sup: float

    def to_dict(self) -> dict:
        return {"pass": self.passed, "sum_first": self.sum_first, "sum_second": self.sum_second,
                "fixed_first": [list(p) for p in self.fixed_first],
                "fixed_second": [list(p) for p in self.fixed_second],
                "outside_sup": self.outside_sup}


def rel_lefschetz_check(m1: PlanarMap, m2: PlanarMap, K: float, seeds_per_axis: int = 15,
                        outside_tol: float = 1e-12) -> RelLefschetzReport:
    """Compare index sums of two maps that agree outside the disk of radius K."""
    rng = np.random.default_rng(0)
    rho = K * (1.0 + rng.random(512))
    ang = 2.0 * np.pi * rng.random(512)
    shell = np.stack([rho * np.cos(ang), rho * np.sin(ang)], axis=-1)
    outside_sup = float(np.max(np.abs(m1(shell) - m2(shell))))

    fp1 = locate_fixed_points(m1, K, seeds_per_axis, extra_seeds=[m1.fixed_point])
    fp2 = locate_fixed_points(m2, K, seeds_per_axis, extra_seeds=[m2.fixed_point])
    s1 = lefschetz_number(m1, fp1)
    s2 = lefschetz_number(m2, fp2)
    passed = outside_sup <= outside_tol and s1 == s2
    logger.info("rel_lefschetz %s vs %s: %d vs %d (%d / %d fixed points)",
                m1.name, m2.name, s1, s2, len(fp1), len(fp2))
    return RelLefschetzReport(passed, s1, s2, fp1, fp2, outside_sup)


# ---------------------------------------------------------------------------
# Perturbation fixtures
# ---------------------------------------------------------------------------

def bump(points, center=(0.0, 0.0), radius: float = 1.0) -> np.ndarray:
    """C^∞ bump: 1 within radius/2 of center, 0 beyond radius."""
    p = np.asarray(points, dtype=float)
    d = np.hypot(p[..., 0] - center[0], p[..., 1] - center[1])
    return 1.0 - smooth_step((d - 0.5 * radius) / (0.5 * radius))


def perturbed_map(base: PlanarMap, vector, center=(0.0, 0.0), radius: float = 0.5,
                  name: Optional[str] = None) -> PlanarMap:
    """base + bump·vector, equal to base outside the bump support."""
    v = np.asarray(vector, dtype=float)

    def fn(p):
        p = np.asarray(p, dtype=float)
        return base(p) + bump(p, center, radius)[..., None] * v

    return PlanarMap(fn, base.fixed_point, True, base.period, name or f"{base.name}+bump")


# ---------------------------------------------------------------------------
# Tracking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackedOrbit:
    """Simple closed orbit of Φ: its section (centered on it), period and tube radius."""

    orbit_id: str
    section: Section
    period: float
    k: int = 1
    tube_radius: float = 0.12

    @property
    def point(self) -> tuple:
        return self.section.center


@dataclass(frozen=True)
class TrackingOptions:
    tube_trajectories: int = 20
    tube_points: int = 50
    tube_margin: float = 1e-3
    shell_samples: int = 10_000
    shell_radius: Optional[float] = None
    field_tol: float = 1e-9
    sample_rings: int = 4
    sample_per_ring: int = 4
    boundary_margin: float = 1e-6
    newton_rings: int = 1
    newton_per_ring: int = 4
    tol: float = 1e-9
    horizon: float = 50.0
    seed: int = 0
    workers: Optional[int] = None


@dataclass
class TrackingItem:
    orbit_id: str
    a: dict
    c: dict
    d: dict

    @property
    def passed(self) -> bool:
        return bool(self.a["pass"] and self.c["pass"] and self.d["pass"])


@dataclass
class TrackingReport:
    L: float
    items: list
    b: dict
    passed: bool
    failed_at: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "pass": self.passed,
            "failed_at": self.failed_at,
            "b": self.b,
            "orbits": [{"orbit_id": it.orbit_id, "a": it.a, "c": it.c, "d": it.d, "pass": it.passed}
                       for it in self.items],
        }


def _check_unique_fixed_point(psi: FlowModel, orbit: TrackedOrbit, opt: TrackingOptions) -> dict:
    sec = orbit.section
    seeds = sec.sample_points(opt.newton_rings, opt.newton_per_ring)
    try:
        search = find_periodic_orbits(psi, sec, seeds, orbit.k, tol=opt.tol, workers=1)
    except (NoReturn, StepFailure, NonContactPoint) as exc:
        return {"pass": False, "fixed_points": [], "error": str(exc)}
    inside = [p for p in search.points
              if np.hypot(*wrap_displacement(np.subtract(p.point, sec.center), psi.planar_period)) < sec.r_p]

    ang = 2.0 * np.pi * np.arange(64) / 64
    circle = np.asarray(sec.center) + sec.r_p * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    try:
        hol = PlanarMap.holonomy(psi, sec, orbit.k, tol=opt.tol)
        margin = float(np.min(np.linalg.norm(hol.displacement(circle), axis=-1)))
    except (NoReturn, StepFailure, NonContactPoint) as exc:
        return {"pass": False, "fixed_points": [list(p.point) for p in inside], "error": str(exc)}

    passed = len(inside) == 1 and margin > opt.boundary_margin
    return {
        "pass": bool(passed),
        "fixed_points": [list(p.point) for p in inside],
        "count": len(inside),
        "boundary_margin": margin,
        "offset": (float(np.hypot(*np.subtract(inside[0].point, sec.center))) if inside else None),
    }


def _tube_cloud(phi: FlowModel, orbit: TrackedOrbit, opt: TrackingOptions) -> np.ndarray:
    sec = orbit.section
    n = max(1, opt.tube_trajectories - 1)
    ang = 2.0 * np.pi * np.arange(n) / n
    starts = [np.asarray(sec.center, dtype=float)]
    starts += list(np.asarray(sec.center) + 0.5 * orbit.tube_radius *
                   np.stack([np.cos(ang), np.sin(ang)], axis=-1))
    clouds = []
    for p in starts:
        traj = integrate(phi, (sec.t0, p[0], p[1]), orbit.period, opt.tol)
        _, states = traj.sample(opt.tube_points)
        clouds.append(states)
    return np.concatenate(clouds)


def _pairwise_min(a: np.ndarray, b: np.ndarray, period: Optional[float]) -> float:
    if period is None:
        return float(np.min(cdist(a, b)))
    d = a[:, None, :] - b[None, :, :]
    d[..., 1:] = wrap_displacement(d[..., 1:], period)
    return float(np.min(np.linalg.norm(d, axis=-1)))


def _check_fields_agree(phi: FlowModel, psi: FlowModel, orbit: TrackedOrbit, cloud: np.ndarray,
                        all_clouds: list, opt: TrackingOptions) -> dict:
    rng = np.random.default_rng([opt.seed, zlib.crc32(orbit.orbit_id.encode("utf-8"))])
    outer = opt.shell_radius or orbit.section.r_max
    if outer <= orbit.tube_radius:
        return {"pass": False, "error": "shell radius does not exceed tube radius"}
    idx = rng.integers(0, len(cloud), opt.shell_samples)
    rho = rng.uniform(orbit.tube_radius * 1.001, outer, opt.shell_samples)
    ang = rng.uniform(0.0, 2.0 * np.pi, opt.shell_samples)
    pts = cloud[idx].copy()
    pts[:, 1] += rho * np.cos(ang)
    pts[:, 2] += rho * np.sin(ang)
    keep = np.ones(len(pts), dtype=bool)
    for other in all_clouds:
        d = np.min(cdist(pts, other), axis=1) if phi.planar_period is None else \
            np.array([_pairwise_min(p[None, :], other, phi.planar_period) for p in pts])
        keep &= d >= orbit.tube_radius
    pts = pts[keep]
    if len(pts) == 0:
        return {"pass": True, "sup": 0.0, "samples": 0}
    try:
        v1 = np.stack(phi.velocity(pts[:, 0], pts[:, 1], pts[:, 2]), axis=-1)
        v2 = np.stack(psi.velocity(pts[:, 0], pts[:, 1], pts[:, 2]), axis=-1)
    except (NonContactPoint, ArithmeticError) as exc:
        return {"pass": False, "error": str(exc), "samples": int(len(pts))}
    sup = float(np.max(np.abs(v1 - v2)))
    return {"pass": sup < opt.field_tol, "sup": sup, "samples": int(len(pts))}


def _check_return_bound(psi: FlowModel, orbit: TrackedOrbit, L: float, opt: TrackingOptions) -> dict:
    sec = orbit.section
    samples = sec.sample_points(opt.sample_rings, opt.sample_per_ring)
    taus, errors, oracle_err = [], [], []
    for p in samples:
        try:
            res = return_map(psi, sec, p, opt.horizon, opt.tol)
        except (NoReturn, StepFailure, NonContactPoint) as exc:
            errors.append({"point": [float(v) for v in p], "error": type(exc).__name__})
            continue
        taus.append(res.tau)
        vt, _, _ = psi.velocity(sec.t0, p[0], p[1])
        vt = float(vt)
        if vt > 0.0:
            oracle_err.append(abs(res.tau - 1.0 / vt) * vt)
    max_tau = max(taus) if taus else None
    passed = not errors and max_tau is not None and max_tau <= L
    return {
        "pass": bool(passed),
        "max_tau": max_tau,
        "samples": int(len(samples)),
        "failures": errors,
        "oracle_rel_error": max(oracle_err) if oracle_err else None,
    }


def tracking_certificate(phi: FlowModel, psi: FlowModel, orbits: Sequence[TrackedOrbit], L: float,
                         options: Optional[TrackingOptions] = None) -> TrackingReport:
    """Checks (a)–(d) that Ψ tracks the listed simple orbits of Φ up to period L.

    (a) Hol_Ψ has exactly one fixed point in each P, with displacement bounded
        away from zero on ∂P;
    (b) sampled flow tubes of distinct orbits stay farther apart than the margin;
    (c) Φ and Ψ agree (sup-norm) on samples outside every tube;
    (d) every sample point of P returns under Ψ within time L.
    """
    opt = options or TrackingOptions()
    orbits = sorted(orbits, key=lambda o: o.orbit_id)
    for o in orbits:
        if o.period >= L:
            raise ValueError(f"orbit {o.orbit_id} has period {o.period} >= L = {L}")

    clouds = parallel_map(lambda o: _tube_cloud(phi, o, opt), orbits, opt.workers)
    pair_min = math.inf
    pairs = []
    for i in range(len(orbits)):
        for j in range(i + 1, len(orbits)):
            d = _pairwise_min(clouds[i], clouds[j], phi.planar_period)
            pairs.append({"orbits": [orbits[i].orbit_id, orbits[j].orbit_id], "min_distance": d})
            pair_min = min(pair_min, d)
    b = {"pass": pair_min > opt.tube_margin, "min_distance": None if math.isinf(pair_min) else pair_min,
         "pairs": pairs}

    def run(i):
        o = orbits[i]
        return TrackingItem(
            o.orbit_id,
            _check_unique_fixed_point(psi, o, opt),
            _check_fields_agree(phi, psi, o, clouds[i], clouds, opt),
            _check_return_bound(psi, o, L, opt),
        )

    items = parallel_map(run, range(len(orbits)), opt.workers)
    failed = sorted({letter for it in items for letter in "acd" if not getattr(it, letter)["pass"]} |
                    (set() if b["pass"] else {"b"}))
    passed = not failed
    logger.info("tracking %s -> %s (L=%g): %s", phi.name, psi.name, L, "pass" if passed else f"fail {failed}")
    return TrackingReport(L, items, b, passed, failed)


# ---------------------------------------------------------------------------
# Census sums
# ---------------------------------------------------------------------------

@dataclass
class SumCheckReport:
    passed: bool
    sum_phi: int
    sum_psi: int
    difference: int

    def to_dict(self) -> dict:
        return {"pass": self.passed, "sum_phi": self.sum_phi, "sum_psi": self.sum_psi,
                "difference": self.difference}


def tracking_sum_check(census_phi, census_psi, key, L: float) -> SumCheckReport:
    """Σ Lef over simple orbits of class `key` up to period L, compared for Φ and Ψ.

    Raises:
        IncompleteCensus: either census is not complete up to L.
    """
    census_phi.require_complete(L)
    census_psi.require_complete(L)
    s_phi = sum(r.lefschetz for r in census_phi.records_in(key, L) if r.multiplicity == 1)
    s_psi = sum(r.lefschetz for r in census_psi.records_in(key, L) if r.multiplicity == 1)
    return SumCheckReport(s_phi == s_psi, s_phi, s_psi, s_psi - s_phi)
