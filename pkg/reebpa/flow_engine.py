# -*- coding: utf-8 -*-
"""
reebpa/flow_engine.py

Flow models on (t, x, y) space, adaptive integration, first-return maps to
sections {t = t0} and periodic-orbit search.

Every model has a global t-coordinate. Suspension models glue the planar
coordinates by the base map each time t crosses an integer; the integrator
stops at those crossings (terminal events), applies the glue and restarts,
so a Trajectory is a chain of dense-output pieces.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from reebpa.errors import (
    NoReturn,
    NonContactPoint,
    NonConvergence,
    NonTransversalSection,
    StepFailure,
)
from reebpa.expr_dsl import as_expression, evaluate
from reebpa.local_models import SuspensionFlow
from reebpa.singular_contact import SmoothedForm, SmoothingChart
from reebpa.workers import parallel_map

logger = logging.getLogger(__name__)

T_MAX = 50.0
DEFAULT_TOL = 1e-10
NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 60
NEWTON_MAX_HALVINGS = 30
DEDUP_TOL = 1e-6
R_FLOOR = 1e-9
EVENT_TOL = 1e-9
ARC_SAMPLES = 64


def wrap_displacement(d, period: Optional[float]):
    """Shortest representative of a planar displacement on ℝ² or on the torus."""
    d = np.asarray(d, dtype=float)
    if period is None:
        return d
    return d - period * np.round(d / period)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

class FlowModel(ABC):
    """Vector field on (t, x, y). `velocity` accepts broadcastable arrays."""

    name: str = "flow"
    planar_period: Optional[float] = None
    glues: bool = False

    @abstractmethod
    def velocity(self, t, x, y):
        """(ṫ, ẋ, ẏ)."""

    def glue(self, p) -> np.ndarray:
        return np.asarray(p, dtype=float)

    def wrap(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.planar_period is None:
            return p
        return np.mod(p, self.planar_period)


class ChartReebModel(FlowModel):
    """Reeb field of α_χ in Cartesian chart coordinates.

    Below `r_floor` the field is evaluated at r_floor and its planar part is
    scaled linearly to zero at the axis.

    Raises (from velocity):
        NonContactPoint: the volume density is not positive at an evaluated point.
    """

    def __init__(self, form, chart: Optional[SmoothingChart] = None, chi=None, r_floor: float = R_FLOOR):
        self.smoothed = SmoothedForm(form, chart or SmoothingChart.identity(), chi)
        self.r_floor = r_floor
        self.name = f"reeb:{form.name}"

    def velocity(self, t, x, y):
        t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        r_eval = np.maximum(r, self.r_floor)
        t_dot, r_dot, th_dot, dens = self.smoothed.reeb(t, r_eval, th)
        if np.any(dens <= 0.0):
            i = np.unravel_index(int(np.argmin(dens)), dens.shape) if dens.ndim else ()
            raise NonContactPoint((float(t[i]), float(x[i]), float(y[i])), float(dens[i]))
        c, s = np.cos(th), np.sin(th)
        scale = np.minimum(1.0, r / self.r_floor)
        vx = (r_dot * c - r_eval * th_dot * s) * scale
        vy = (r_dot * s + r_eval * th_dot * c) * scale
        return t_dot, vx, vy

    def alpha(self, state, v) -> np.ndarray:
        """α_χ evaluated on Cartesian velocities v at states (t, x, y)."""
        state = np.asarray(state, dtype=float)
        v = np.asarray(v, dtype=float)
        t, x, y = state[..., 0], state[..., 1], state[..., 2]
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        u, a, b = self.smoothed.components(t, r, th)
        r_dot = (x * v[..., 1] + y * v[..., 2]) / r
        th_dot = (x * v[..., 2] - y * v[..., 1]) / r ** 2
        return u * v[..., 0] + a * r_dot + b * th_dot


class SuspensionModel(FlowModel):
    """∂_t on the mapping torus of the base map."""

    def __init__(self, flow: SuspensionFlow):
        self.flow = flow
        self.planar_period = flow.base.planar_period
        self.glues = True
        self.name = f"suspension:{type(flow.base).__name__}"

    def velocity(self, t, x, y):
        t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
        return np.ones_like(t), np.zeros_like(x), np.zeros_like(y)

    def glue(self, p) -> np.ndarray:
        return self.flow.base.apply_cartesian(p)


class TorsionModel(FlowModel):
    """Reeb field (0, cos 2πt, sin 2πt) of cos(2πt)dx + sin(2πt)dy on [0, k] × 𝕋²."""

    planar_period = 1.0

    def __init__(self, k: int = 1):
        if k < 1:
            raise ValueError(f"torsion must be >= 1, got {k}")
        self.k = int(k)
        self.name = f"torsion:{k}"

    def velocity(self, t, x, y):
        t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
        return np.zeros_like(t), np.cos(2.0 * np.pi * t), np.sin(2.0 * np.pi * t)


class ExpressionFieldModel(FlowModel):
    """User field with components given as expressions in t, x, y (r, th bound too)."""

    def __init__(self, t_expr, x_expr, y_expr, period: Optional[float] = None, name: str = "field"):
        self.exprs = tuple(as_expression(e) for e in (t_expr, x_expr, y_expr))
        self.planar_period = period
        self.name = name

    def velocity(self, t, x, y):
        t, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
        binding = {"t": t, "x": x, "y": y, "r": np.hypot(x, y), "th": np.arctan2(y, x)}
        return tuple(
            np.broadcast_to(np.asarray(evaluate(e, binding), dtype=float), t.shape) for e in self.exprs
        )


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Piece:
    tau_start: float
    tau_end: float
    sol: object       # scipy OdeSolution on [tau_start, tau_end]


@dataclass(frozen=True)
class Trajectory:
    """Immutable chain of dense-output pieces; states are (t, x, y)."""

    pieces: tuple
    start: tuple
    end: tuple
    steps: int

    @property
    def duration(self) -> float:
        return self.pieces[-1].tau_end if self.pieces else 0.0

    def __call__(self, tau: float) -> np.ndarray:
        for piece in self.pieces:
            if tau <= piece.tau_end + 1e-15:
                return piece.sol(min(max(tau, piece.tau_start), piece.tau_end))
        return np.asarray(self.end, dtype=float)

    def sample(self, n: int = 200):
        """(taus, states) at n flow times, uniform per piece."""
        taus, states = [], []
        per = max(2, n // max(1, len(self.pieces)))
        for piece in self.pieces:
            if piece.tau_end <= piece.tau_start:
                continue
            ts = np.linspace(piece.tau_start, piece.tau_end, per)
            taus.append(ts)
            states.append(piece.sol(ts).T)
        if not taus:
            return np.array([0.0]), np.asarray([self.start], dtype=float)
        return np.concatenate(taus), np.concatenate(states)

    def arc_length(self, per_piece: int = ARC_SAMPLES) -> float:
        total = 0.0
        for piece in self.pieces:
            if piece.tau_end <= piece.tau_start:
                continue
            pts = piece.sol(np.linspace(piece.tau_start, piece.tau_end, per_piece)).T
            total += float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        return total


def _rhs(model: FlowModel):
    def fun(tau, y):
        vt, vx, vy = model.velocity(y[0], y[1], y[2])
        return np.array([float(vt), float(vx), float(vy)])
    return fun


def _run(model: FlowModel, y0, tau_max: float, tol: float, t_stop: Optional[float] = None):
    """Integrate piecewise; returns (Trajectory, reached t_stop)."""
    fun = _rhs(model)
    y = np.asarray(y0, dtype=float).copy()
    tau = 0.0
    pieces = []
    steps = 0
    reached = False
    while tau < tau_max:
        events = []
        if t_stop is not None:
            def ev_stop(_tau, yy, _target=t_stop):
                return yy[0] - _target
            ev_stop.terminal, ev_stop.direction = True, 1.0
            events.append(ev_stop)
        n_next = None
        if model.glues:
            n_next = math.floor(y[0] + 1e-12) + 1

            def ev_glue(_tau, yy, _n=n_next):
                return yy[0] - _n
            ev_glue.terminal, ev_glue.direction = True, 1.0
            events.append(ev_glue)

        sol = solve_ivp(fun, (tau, tau_max), y, method="RK45", rtol=tol, atol=tol,
                        dense_output=True, events=events or None)
        if sol.status == -1:
            raise StepFailure(f"integration failed at tau={tau:.6g}: {sol.message}")
        steps += max(0, sol.t.size - 1)
        pieces.append(_Piece(tau, float(sol.t[-1]), sol.sol))
        y = sol.y[:, -1].copy()
        tau = float(sol.t[-1])
        if sol.status != 1:
            break

        # coincident roots record only one event, so both are read off the state
        hit_stop = t_stop is not None and (sol.t_events[0].size > 0 or abs(y[0] - t_stop) < EVENT_TOL)
        hit_glue = n_next is not None and (sol.t_events[-1].size > 0 or abs(y[0] - n_next) < EVENT_TOL)
        if hit_glue:
            y[0] = float(round(y[0]))
            y[1:] = model.glue(y[1:])
        if hit_stop:
            y[0] = t_stop
            reached = True
            break

    traj = Trajectory(tuple(pieces), tuple(float(v) for v in np.asarray(y0, dtype=float)),
                      tuple(float(v) for v in y), steps)
    return traj, reached


def integrate(f: FlowModel, x0, T: float, tol: float = DEFAULT_TOL) -> Trajectory:
    """RK45 with dense output from state x0 = (t, x, y) for flow time T ≥ 0.

    Raises:
        StepFailure: the solver could not continue (step-size underflow).
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if T < 0:
        raise ValueError("flow time must be non-negative")
    traj, _ = _run(f, x0, float(T), tol)
    return traj


# ---------------------------------------------------------------------------
# Sections and return maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Section:
    """Disk {t = t0, |p − center| < r_max} with sub-disk P of radius r_p."""

    t0: float = 0.0
    r_max: float = 0.5
    r_p: float = 0.25
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.r_p <= self.r_max:
            raise ValueError(f"need 0 < r_p <= r_max, got ({self.r_p}, {self.r_max})")

    @classmethod
    def for_model(cls, model: FlowModel, t0: float = 0.0, r_max: float = 0.5, r_p: float = 0.25,
                  center=(0.0, 0.0), samples: int = 64) -> "Section":
        """Build a section and check ṫ > 0 on it."""
        section = cls(t0, r_max, r_p, tuple(float(c) for c in center))
        pts = section.sample_points(rings=4, per_ring=samples // 4, radius=r_max)
        vt, _, _ = model.velocity(np.full(len(pts), t0), pts[:, 0], pts[:, 1])
        if np.any(np.asarray(vt) <= 0.0):
            raise NonTransversalSection(f"{model.name}: t-component not positive on section t={t0}")
        return section

    def sample_points(self, rings: int = 4, per_ring: int = 4, radius: Optional[float] = None) -> np.ndarray:
        """Center plus `rings` concentric rings of `per_ring` points inside radius (default r_p)."""
        radius = self.r_p if radius is None else radius
        pts = [np.asarray(self.center, dtype=float)]
        for i in range(1, rings + 1):
            rho = radius * i / (rings + 0.5)
            ang = 2.0 * np.pi * (np.arange(per_ring) + 0.5 * (i % 2)) / per_ring
            pts.extend(np.stack([self.center[0] + rho * np.cos(ang),
                                 self.center[1] + rho * np.sin(ang)], axis=-1))
        return np.asarray(pts)


@dataclass(frozen=True)
class ReturnMapResult:
    image: tuple
    tau: float
    arc_length: float
    success: bool

    def to_dict(self) -> dict:
        return {"image": list(self.image), "tau": self.tau, "arc_length": self.arc_length,
                "success": self.success}


def return_map(f: FlowModel, s: Section, x, horizon: float = T_MAX, tol: float = DEFAULT_TOL) -> ReturnMapResult:
    """First return of the point x ∈ P to {t = t0 + 1}.

    Raises:
        NoReturn:    no crossing before `horizon` flow time.
        StepFailure: integration broke down.
    """
    y0 = (s.t0, float(x[0]), float(x[1]))
    traj, reached = _run(f, y0, horizon, tol, t_stop=s.t0 + 1.0)
    if not reached:
        raise NoReturn(horizon)
    image = f.wrap(np.asarray(traj.end[1:])) if f.planar_period is not None else np.asarray(traj.end[1:])
    return ReturnMapResult(tuple(float(v) for v in image), traj.duration, traj.arc_length(), True)


def holonomy_map(f: FlowModel, s: Section, k: int = 1, horizon: float = T_MAX,
                 tol: float = DEFAULT_TOL) -> Callable:
    """x ↦ Hol^k(x); accepts a point or an (..., 2) array of points."""

    def hol(points):
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        out = np.empty_like(flat)
        for i, p in enumerate(flat):
            q = p
            for _ in range(k):
                q = np.asarray(return_map(f, s, q, horizon, tol).image)
            out[i] = q
        return out.reshape(pts.shape)

    return hol


def iterate_return(f: FlowModel, s: Section, x, k: int, horizon: float = T_MAX, tol: float = DEFAULT_TOL):
    """(Hol^k(x), list of the k return times)."""
    q = np.asarray(x, dtype=float)
    times = []
    for _ in range(k):
        res = return_map(f, s, q, horizon, tol)
        q = np.asarray(res.image)
        times.append(res.tau)
    return q, times


def reeb_parametrization_defect(model: ChartReebModel, trajectory: Trajectory, n: int = 200) -> float:
    """max |α_χ(γ') − 1| over sampled points of a Reeb trajectory away from the axis."""
    _, states = trajectory.sample(n)
    keep = np.hypot(states[:, 1], states[:, 2]) > 10.0 * model.r_floor
    if not np.any(keep):
        return 0.0
    states = states[keep]
    v = np.stack(model.velocity(states[:, 0], states[:, 1], states[:, 2]), axis=-1)
    return float(np.max(np.abs(model.alpha(states, v) - 1.0)))


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

def fd_jacobian(residual: Callable, x: np.ndarray) -> np.ndarray:
    """Central differences with h = 1e−6·(1 + |x|)."""
    x = np.asarray(x, dtype=float)
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(residual(x + e)) - np.asarray(residual(x - e))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def damped_newton(residual: Callable, x0, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER,
                  max_halvings: int = NEWTON_MAX_HALVINGS) -> np.ndarray:
    """Newton on residual(x) = 0 with step halving.

    Raises:
        NonConvergence: no acceptable step, singular Jacobian or iteration cap.
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = np.asarray(residual(x))
    norm = float(np.linalg.norm(fx))
    for _ in range(max_iter):
        if norm < tol:
            return x
        try:
            step = np.linalg.solve(fd_jacobian(residual, x), fx)
        except np.linalg.LinAlgError:
            raise NonConvergence(x0) from None
        lam = 1.0
        for _ in range(max_halvings + 1):
            trial = x - lam * step
            ft = np.asarray(residual(trial))
            nt = float(np.linalg.norm(ft))
            if nt < norm:
                x, fx, norm = trial, ft, nt
                break
            lam *= 0.5
        else:
            raise NonConvergence(x0)
    if norm < tol:
        return x
    raise NonConvergence(x0)


@dataclass(frozen=True)
class PeriodicPoint:
    point: tuple
    period: float
    k: int
    return_times: tuple
    converged_from: tuple

    def to_dict(self) -> dict:
        return {"point": list(self.point), "period": self.period, "k": self.k,
                "converged_from": list(self.converged_from)}


@dataclass
class OrbitSearch:
    points: list = field(default_factory=list)
    failures: int = 0

    def to_dict(self) -> dict:
        return {"orbits": [p.to_dict() for p in self.points], "failures": self.failures}


def find_periodic_orbits(f: FlowModel, s: Section, seeds: Sequence, k: int = 1,
                         tol: float = DEFAULT_TOL, workers: Optional[int] = None) -> OrbitSearch:
    """Fixed points of Hol^k by damped Newton from every seed.

    Non-converging seeds are dropped and counted; the merged list is
    de-duplicated within max(1e−6, 1e4·tol) and sorted lexicographically.
    """
    if k < 1:
        raise ValueError("iterate must be >= 1")
    period = f.planar_period

    def residual(x):
        q, _ = iterate_return(f, s, x, k, tol=tol)
        return wrap_displacement(q - np.asarray(x), period)

    def solve(seed):
        seed = tuple(float(v) for v in seed)
        try:
            x = damped_newton(residual, seed, tol=max(NEWTON_TOL, 10.0 * tol))
            x = f.wrap(x)
            _, times = iterate_return(f, s, x, k, tol=tol)
        except (NonConvergence, NoReturn, StepFailure, NonContactPoint) as exc:
            logger.debug("seed %s dropped: %s", seed, exc)
            return None
        return PeriodicPoint(tuple(float(v) for v in x), float(sum(times)), k, tuple(times), seed)

    results = parallel_map(solve, list(seeds), workers)
    found = [r for r in results if r is not None]
    failures = len(results) - len(found)

    radius = max(DEDUP_TOL, 1e4 * tol)
    unique: list[PeriodicPoint] = []
    for p in sorted(found, key=lambda q: q.point):
        if all(np.max(np.abs(wrap_displacement(np.subtract(p.point, u.point), period))) > radius
               for u in unique):
            unique.append(p)
    logger.info("find_periodic_orbits %s k=%d: %d orbits, %d failed seeds", f.name, k, len(unique), failures)
    return OrbitSearch(unique, failures)


def seed_grid(center=(0.0, 0.0), radius: float = 0.5, n: int = 8, periodic: bool = False) -> np.ndarray:
    """n×n seeds: the unit square for torus models, else a square around center clipped to the disk."""
    if periodic:
        g = (np.arange(n) + 0.5) / n
        X, Y = np.meshgrid(g, g, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)
    g = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(g + center[0], g + center[1], indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    keep = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]) <= radius
    return pts[keep]
