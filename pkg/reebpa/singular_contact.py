# -*- coding: utf-8 -*-
"""
reebpa/singular_contact.py

Contact forms on a tubular chart ℝ/ℤ_t × 𝔻_(r,θ) around a singular orbit,
their flattening pullback ρ*α (ρ(t, r, θ) = (t, g(r), θ)) and the smoothed
form α_χ = ρ*α + χ(r) dθ.

Notation for a form α = u dt + a dr + b dθ:

    dα = W_tr dt∧dr + W_tθ dt∧dθ + W_rθ dr∧dθ
    W_tr = ∂_t a − ∂_r u,   W_tθ = ∂_t b − ∂_θ u,   W_rθ = ∂_r b − ∂_θ a
    α∧dα = (u W_rθ − a W_tθ + b W_tr) dt∧dr∧dθ
    Reeb R = (W_rθ, −W_tθ, W_tr) / density

For the smoothed form the same quantities split as G + H_χ with
    G   = g'(r) · density_α(t, g(r), θ)
    H_χ = χ'(r) · u(t, g(r), θ) + χ(r) · g'(r) · W_tr(t, g(r), θ)
and the Reeb numerators F_t = g'W_rθ∘ρ + χ', F_r = −W_tθ∘ρ, F_θ = g'W_tr∘ρ.

Every routine takes broadcastable arrays; a grid is evaluated in one call.
Raw dα entries come from numeric differentiation of the parsed components
(Richardson step, r-stencils clamped to stay inside r > 0).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from reebpa.errors import NoEpsilonFound, NonContactPoint
from reebpa.expr_dsl import DERIV_STEP, Expression, as_expression, evaluate, richardson_derivative

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
R_MIN = 0.01
AXIS_DELTA = 0.1
SLOPE_TOL = 1e-6
RESIDUAL_R_MIN = 0.05
EPSILON_LADDER = 40
FLUX_SAMPLES = 256
MAX_REPORTED_CELLS = 20
SPLICE = (0.8, 0.95)


# ---------------------------------------------------------------------------
# Numeric helpers
# ---------------------------------------------------------------------------

def _grid_args(t, r, th):
    t, r, th = np.broadcast_arrays(
        np.asarray(t, dtype=float), np.asarray(r, dtype=float), np.asarray(th, dtype=float)
    )
    return t, r, th


def _eval(expr: Expression, t, r, th) -> np.ndarray:
    binding = {"t": t, "r": r, "th": th, "x": r * np.cos(th), "y": r * np.sin(th)}
    return np.broadcast_to(np.asarray(evaluate(expr, binding), dtype=float), np.shape(t))


def _partial(fn, var: str, t, r, th, h: float = DERIV_STEP) -> np.ndarray:
    """∂fn/∂var for fn(t, r, th); r-stencils shrink to h ≤ r/2."""
    if var == "t":
        return richardson_derivative(lambda v: fn(v, r, th), t, h)
    if var == "th":
        return richardson_derivative(lambda v: fn(t, r, v), th, h)
    step = np.where(r > 0.0, np.minimum(h, 0.5 * r), h)
    step = np.where(step > 0.0, step, h)
    return richardson_derivative(lambda v: fn(t, v, th), r, step)


def exterior_derivative_of(u_fn, a_fn, b_fn, t, r, th, h: float = DERIV_STEP):
    """(W_tr, W_tθ, W_rθ) of u dt + a dr + b dθ by direct differentiation."""
    w_tr = _partial(a_fn, "t", t, r, th, h) - _partial(u_fn, "r", t, r, th, h)
    w_tth = _partial(b_fn, "t", t, r, th, h) - _partial(u_fn, "th", t, r, th, h)
    w_rth = _partial(b_fn, "r", t, r, th, h) - _partial(a_fn, "th", t, r, th, h)
    return w_tr, w_tth, w_rth


def volume_density(components, dform) -> np.ndarray:
    """Coefficient of dt∧dr∧dθ in α∧dα."""
    u, a, b = components
    w_tr, w_tth, w_rth = dform
    return u * w_rth - a * w_tth + b * w_tr


# ---------------------------------------------------------------------------
# Smooth step and profiles
# ---------------------------------------------------------------------------

def _flat(x):
    """exp(−1/x) for x > 0, 0 otherwise; flat at 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0.0, x, 1.0)
    return np.where(x > 0.0, np.exp(-1.0 / safe), 0.0)


def smooth_step(x):
    """C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1."""
    f0, f1 = _flat(x), _flat(1.0 - np.asarray(x, dtype=float))
    return f0 / (f0 + f1)


def smooth_step_prime(x):
    x = np.asarray(x, dtype=float)
    f0, f1 = _flat(x), _flat(1.0 - x)
    x_safe = np.where(x > 0.0, x, 1.0)
    y_safe = np.where(1.0 - x > 0.0, 1.0 - x, 1.0)
    df0 = np.where(x > 0.0, f0 / x_safe ** 2, 0.0)
    df1 = np.where(1.0 - x > 0.0, f1 / y_safe ** 2, 0.0)
    return (df0 * f1 + f0 * df1) / (f0 + f1) ** 2


@dataclass(frozen=True)
class SmoothingFunction:
    """χ(r) = A r² (1 − step((r − ε_in)/(1 − ε_out − ε_in))).

    Quadratic core A r² on r ≤ ε_in, identically zero on r ≥ 1 − ε_out.
    """

    A: float
    eps_in: float
    eps_out: float

    def __post_init__(self):
        if self.A <= 0.0:
            raise ValueError(f"amplitude A must be positive, got {self.A}")
        if not (0.0 < self.eps_in and 0.0 < self.eps_out and self.eps_in < 1.0 - self.eps_out):
            raise ValueError(
                f"need 0 < eps_in < 1 - eps_out with eps_out > 0, got ({self.eps_in}, {self.eps_out})"
            )

    @property
    def width(self) -> float:
        return 1.0 - self.eps_out - self.eps_in

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self.A * r ** 2 * (1.0 - smooth_step((r - self.eps_in) / self.width))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        x = (r - self.eps_in) / self.width
        return self.A * (2.0 * r * (1.0 - smooth_step(x)) - r ** 2 * smooth_step_prime(x) / self.width)

    def scaled(self, eps: float) -> "SmoothingFunction":
        return SmoothingFunction(self.A * eps, self.eps_in, self.eps_out)

    def max_value(self, samples: int = 4096) -> float:
        r = np.linspace(0.0, 1.0, samples)
        return float(np.max(self.value(r)))

    def to_dict(self) -> dict:
        return {"A": self.A, "eps_in": self.eps_in, "eps_out": self.eps_out}


@dataclass(frozen=True)
class QuadraticProfile:
    """χ(r) = A r² everywhere; a test profile without cutoff."""

    A: float

    def value(self, r):
        return self.A * np.asarray(r, dtype=float) ** 2

    def derivative(self, r):
        return 2.0 * self.A * np.asarray(r, dtype=float)

    def scaled(self, eps: float) -> "QuadraticProfile":
        return QuadraticProfile(self.A * eps)


@dataclass(frozen=True)
class ProfileBlend:
    """(1 − s) χ_a + s χ_b."""

    first: object
    second: object
    s: float

    def value(self, r):
        return (1.0 - self.s) * self.first.value(r) + self.s * self.second.value(r)

    def derivative(self, r):
        return (1.0 - self.s) * self.first.derivative(r) + self.s * self.second.derivative(r)

    def scaled(self, eps: float) -> "ProfileBlend":
        return ProfileBlend(self.first.scaled(eps), self.second.scaled(eps), self.s)


def _chi(chi, r):
    if chi is None:
        z = np.zeros(np.shape(r))
        return z, z
    return np.asarray(chi.value(r), dtype=float), np.asarray(chi.derivative(r), dtype=float)


# ---------------------------------------------------------------------------
# Flattening chart
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothingChart:
    """Flattening diffeomorphism g of [0, 1], identity near 1.

    g = (1 − σ) g_c + σ·r with g_c(r) = r exp(1 − r^(−c)) and σ a smooth step
    rising across `splice`. The default window (0.8, 0.95) sits inside
    [0.8, 1] and leaves g equal to the identity on [0.95, 1], so g and all its
    derivatives already match the identity before the chart boundary.
    `c=None` gives the identity chart. All chart quantities are in the
    normalized radius r / radius.
    """

    c: Optional[float] = 1.0
    radius: float = 1.0
    splice: tuple = SPLICE

    def __post_init__(self):
        if self.c is not None and self.c <= 0.0:
            raise ValueError(f"flattening exponent c must be positive, got {self.c}")
        lo, hi = self.splice
        if not (0.0 < lo < hi <= 1.0):
            raise ValueError(f"splice interval must satisfy 0 < lo < hi <= 1, got {self.splice}")
        if self.radius <= 0.0:
            raise ValueError("chart radius must be positive")

    @classmethod
    def identity(cls) -> "SmoothingChart":
        return cls(c=None)

    @classmethod
    def from_config(cls, cfg: Optional[dict]) -> "SmoothingChart":
        cfg = cfg or {}
        splice = tuple(cfg.get("splice", SPLICE))
        return cls(c=cfg.get("g_c", 1.0), radius=float(cfg.get("radius", 1.0)), splice=splice)

    @property
    def is_identity(self) -> bool:
        return self.c is None

    def _gc(self, s):
        pos = s > 0.0
        s_safe = np.where(pos, s, 1.0)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            inv = s_safe ** (-self.c)
            core = np.where(pos, np.exp(1.0 - inv), 0.0)
            gc_prime = np.where(core > 0.0, core * (1.0 + self.c * inv), 0.0)
        return s * core, gc_prime

    def g(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_identity:
            return r
        s = r / self.radius
        gc, _ = self._gc(s)
        sigma = smooth_step((s - self.splice[0]) / (self.splice[1] - self.splice[0]))
        return self.radius * ((1.0 - sigma) * gc + sigma * s)

    def g_prime(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_identity:
            return np.ones_like(r)
        s = r / self.radius
        gc, gc_prime = self._gc(s)
        width = self.splice[1] - self.splice[0]
        x = (s - self.splice[0]) / width
        sigma = smooth_step(x)
        dsigma = smooth_step_prime(x) / width
        return (1.0 - sigma) * gc_prime + sigma + dsigma * (s - gc)

    def flatness_report(self, radii=(1e-1, 1e-2, 1e-3, 1e-4), tol: float = 1e-8) -> dict:
        """|g^(j)| for j ≤ 3 at shrinking radii; flat iff all vanish at the smallest radius."""
        radii = np.asarray(radii, dtype=float)
        d1 = self.g_prime
        d2 = lambda x: richardson_derivative(d1, x, np.asarray(x) / 8.0)
        d3 = lambda x: richardson_derivative(d2, x, np.asarray(x) / 8.0)
        values = {
            0: np.abs(self.g(radii)),
            1: np.abs(d1(radii)),
            2: np.abs(d2(radii)),
            3: np.abs(d3(radii)),
        }
        flat = (not self.is_identity) and all(float(v[-1]) < tol for v in values.values())
        return {
            "radii": radii.tolist(),
            "orders": {str(j): v.tolist() for j, v in values.items()},
            "flat": bool(flat),
        }

    def to_dict(self) -> dict:
        return {"g_c": self.c, "radius": self.radius, "splice": list(self.splice)}


# ---------------------------------------------------------------------------
# Forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartContactForm:
    """α = u dt + a dr + b dθ with parsed components."""

    u: Expression
    a: Expression
    b: Expression
    lipschitz: Optional[float] = None
    name: str = "user"

    @classmethod
    def from_strings(cls, u="1", a="0", b="0", lipschitz=None, name="user") -> "ChartContactForm":
        return cls(as_expression(u), as_expression(a), as_expression(b), lipschitz, name)

    def u_fn(self, t, r, th):
        return _eval(self.u, t, r, th)

    def a_fn(self, t, r, th):
        return _eval(self.a, t, r, th)

    def b_fn(self, t, r, th):
        return _eval(self.b, t, r, th)

    def components(self, t, r, th):
        t, r, th = _grid_args(t, r, th)
        return self.u_fn(t, r, th), self.a_fn(t, r, th), self.b_fn(t, r, th)

    def exterior_derivative(self, t, r, th, h: float = DERIV_STEP):
        t, r, th = _grid_args(t, r, th)
        return exterior_derivative_of(self.u_fn, self.a_fn, self.b_fn, t, r, th, h)

    def density(self, t, r, th):
        t, r, th = _grid_args(t, r, th)
        return volume_density(self.components(t, r, th), self.exterior_derivative(t, r, th))

    def to_dict(self) -> dict:
        return {"u": self.u.to_text(), "a": self.a.to_text(), "b": self.b.to_text(), "name": self.name}


@dataclass(frozen=True)
class SmoothedForm:
    """α_χ = ρ*α + χ(r) dθ; with chi=None this is the pullback ρ*α."""

    form: ChartContactForm
    chart: SmoothingChart = field(default_factory=SmoothingChart)
    chi: object = None

    # -- components --------------------------------------------------------
    def u_fn(self, t, r, th):
        return self.form.u_fn(t, self.chart.g(r), th)

    def a_fn(self, t, r, th):
        return self.chart.g_prime(r) * self.form.a_fn(t, self.chart.g(r), th)

    def b_fn(self, t, r, th):
        chi, _ = _chi(self.chi, r)
        return self.form.b_fn(t, self.chart.g(r), th) + chi

    def components(self, t, r, th):
        t, r, th = _grid_args(t, r, th)
        return self.u_fn(t, r, th), self.a_fn(t, r, th), self.b_fn(t, r, th)

    # -- derivatives -------------------------------------------------------
    def _raw_at_pullback(self, t, r, th, h):
        s = self.chart.g(r)
        comps = self.form.components(t, s, th)
        dform = self.form.exterior_derivative(t, s, th, h)
        return comps, dform

    def exterior_derivative(self, t, r, th, h: float = DERIV_STEP):
        """Chain-rule entries (W_tr, W_tθ, W_rθ) of dα_χ."""
        t, r, th = _grid_args(t, r, th)
        _, (w_tr, w_tth, w_rth) = self._raw_at_pullback(t, r, th, h)
        gp = self.chart.g_prime(r)
        _, dchi = _chi(self.chi, r)
        return gp * w_tr, w_tth, gp * w_rth + dchi

    def direct_exterior_derivative(self, t, r, th, h: float = DERIV_STEP):
        """dα_χ by differentiating the composed components directly."""
        t, r, th = _grid_args(t, r, th)
        return exterior_derivative_of(self.u_fn, self.a_fn, self.b_fn, t, r, th, h)

    def decomposition(self, t, r, th, h: float = DERIV_STEP):
        """(G, H_χ, F_t, F_r, F_θ) on broadcast arrays."""
        t, r, th = _grid_args(t, r, th)
        (u, a, b), (w_tr, w_tth, w_rth) = self._raw_at_pullback(t, r, th, h)
        gp = self.chart.g_prime(r)
        chi, dchi = _chi(self.chi, r)
        big_g = gp * volume_density((u, a, b), (w_tr, w_tth, w_rth))
        big_h = dchi * u + chi * gp * w_tr
        return big_g, big_h, gp * w_rth + dchi, -w_tth, gp * w_tr

    def density(self, t, r, th, h: float = DERIV_STEP):
        big_g, big_h, *_ = self.decomposition(t, r, th, h)
        return big_g + big_h

    def reeb(self, t, r, th, h: float = DERIV_STEP):
        """(ṫ, ṙ, θ̇, density). Division is guarded; callers check density > 0."""
        big_g, big_h, f_t, f_r, f_th = self.decomposition(t, r, th, h)
        dens = big_g + big_h
        safe = np.where(dens > 0.0, dens, 1.0)
        return f_t / safe, f_r / safe, f_th / safe, dens


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Sampling grid on ℝ/ℤ × 𝔻: geometric radii below delta, uniform above."""

    n_t: int = 32
    n_r: int = 32
    n_theta: int = 32
    r_min: float = R_MIN
    delta: float = AXIS_DELTA
    r_max: float = 1.0

    def __post_init__(self):
        if min(self.n_t, self.n_r, self.n_theta) < 8:
            raise ValueError("grid resolution must be at least 8 per axis")
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError(f"need 0 < r_min < r_max, got ({self.r_min}, {self.r_max})")

    @classmethod
    def from_config(cls, cfg: Optional[dict]) -> "GridSpec":
        cfg = dict(cfg or {})
        return cls(**{k: cfg[k] for k in ("n_t", "n_r", "n_theta", "r_min", "delta", "r_max") if k in cfg})

    def radii(self) -> np.ndarray:
        if self.r_min < self.delta < self.r_max:
            n_near = self.n_r // 2
            near = np.geomspace(self.r_min, self.delta, n_near, endpoint=False)
            far = np.linspace(self.delta, self.r_max, self.n_r - n_near)
            return np.concatenate([near, far])
        return np.linspace(self.r_min, self.r_max, self.n_r)

    def mesh(self):
        t = np.linspace(0.0, 1.0, self.n_t, endpoint=False)
        th = np.linspace(0.0, TWO_PI, self.n_theta, endpoint=False)
        return np.meshgrid(t, self.radii(), th, indexing="ij")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class ReebFieldResult:
    t_dot: np.ndarray
    r_dot: np.ndarray
    theta_dot: np.ndarray
    density: np.ndarray
    residual_alpha: float
    residual_iota: float


@dataclass
class ContactReport:
    min_density: float
    axis_slope: Optional[float]
    residual_sup: Optional[float]
    passed: bool
    failing_cells: list = field(default_factory=list)
    epsilon: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "min_density": self.min_density,
            "axis_slope": self.axis_slope,
            "residual_sup": self.residual_sup,
            "pass": self.passed,
            "failing_cells": self.failing_cells,
            "epsilon": self.epsilon,
        }


@dataclass
class InequalityReport:
    passed: bool
    C: float
    min_margin: float
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "C": self.C, "min_margin": self.min_margin, "violations": self.violations}


def _cells(mask, t, r, th, values, limit: int = MAX_REPORTED_CELLS) -> list:
    idx = np.argwhere(mask)
    order = np.argsort(values[mask], kind="stable")[:limit]
    out = []
    for i in order:
        cell = tuple(idx[i])
        out.append({
            "t": float(t[cell]), "r": float(r[cell]), "th": float(th[cell]),
            "value": float(values[cell]),
        })
    return out


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def pullback_components(form: ChartContactForm, chart: SmoothingChart, p):
    """(u, a, b) of ρ*α at p = (t, r, θ)."""
    return SmoothedForm(form, chart, None).components(*p)


def smoothed_form(form: ChartContactForm, chart: SmoothingChart, chi, p):
    """(u, a, b) of α_χ at p = (t, r, θ)."""
    return SmoothedForm(form, chart, chi).components(*p)


def volume_decomposition(form: ChartContactForm, chart: SmoothingChart, chi, p):
    """(G, H_χ) at p = (t, r, θ)."""
    big_g, big_h, *_ = SmoothedForm(form, chart, chi).decomposition(*p)
    return big_g, big_h


def _iota_residual(sf: SmoothedForm, t, r, th, t_dot, r_dot, th_dot):
    w_tr, w_tth, w_rth = sf.direct_exterior_derivative(t, r, th)
    c_t = -w_tr * r_dot - w_tth * th_dot
    c_r = w_tr * t_dot - w_rth * th_dot
    c_th = w_tth * t_dot + w_rth * r_dot
    return np.maximum(np.maximum(np.abs(c_t), np.abs(c_r)), np.abs(c_th))


def reeb_field(form: ChartContactForm, chart: SmoothingChart, chi, p) -> ReebFieldResult:
    """Reeb field of α_χ at p = (t, r, θ) with its defining-identity residuals.

    Raises:
        NonContactPoint: G + H_χ ≤ 0 somewhere in p.
    """
    sf = SmoothedForm(form, chart, chi)
    t, r, th = _grid_args(*p)
    t_dot, r_dot, th_dot, dens = sf.reeb(t, r, th)
    if np.any(dens <= 0.0):
        i = np.unravel_index(int(np.argmin(dens)), dens.shape) if dens.ndim else ()
        raise NonContactPoint((float(t[i]), float(r[i]), float(th[i])), float(dens[i]))
    u, a, b = sf.components(t, r, th)
    alpha_r = u * t_dot + a * r_dot + b * th_dot
    iota = _iota_residual(sf, t, r, th, t_dot, r_dot, th_dot)
    return ReebFieldResult(
        t_dot, r_dot, th_dot, dens,
        residual_alpha=float(np.max(np.abs(alpha_r - 1.0))),
        residual_iota=float(np.max(iota)),
    )


def verify_contact(form, chart, chi, grid: GridSpec, slope_tol: float = SLOPE_TOL) -> ContactReport:
    """Sample G + H_χ; pass iff positive on r ≥ δ and ≥ c·r with c > slope_tol on r < δ."""
    t, r, th = grid.mesh()
    sf = SmoothedForm(form, chart, chi)
    t_dot, r_dot, th_dot, dens = sf.reeb(t, r, th)

    outer = r >= grid.delta
    inner = ~outer
    min_outer = float(np.min(dens[outer])) if np.any(outer) else math.inf
    axis_slope = float(np.min(dens[inner] / r[inner])) if np.any(inner) else None

    passed = min_outer > 0.0 and (axis_slope is None or axis_slope > slope_tol)
    bad = dens <= 0.0
    if axis_slope is not None:
        bad = bad | (inner & (dens <= slope_tol * r))
    failing = _cells(bad, t, r, th, dens) if np.any(bad) else []

    residual_sup = None
    ok = (r >= RESIDUAL_R_MIN) & (dens > 0.0)
    if np.any(ok):
        u, a, b = sf.components(t, r, th)
        res_alpha = np.abs(u * t_dot + a * r_dot + b * th_dot - 1.0)
        res_iota = _iota_residual(sf, t, r, th, t_dot, r_dot, th_dot)
        residual_sup = float(max(np.max(res_alpha[ok]), np.max(res_iota[ok])))

    report = ContactReport(
        min_density=float(np.min(dens)),
        axis_slope=axis_slope,
        residual_sup=residual_sup,
        passed=bool(passed),
        failing_cells=failing,
    )
    logger.debug("verify_contact %s: min=%.3e slope=%s pass=%s",
                 form.name, report.min_density, axis_slope, report.passed)
    return report


@dataclass
class EpsilonCertificate:
    epsilon: float
    step: int
    report: ContactReport

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "ladder_step": self.step, "report": self.report.to_dict()}


def find_epsilon(form, chart, chi_bar, grid: GridSpec, ladder: int = EPSILON_LADDER) -> EpsilonCertificate:
    """First ε in 2⁻¹, 2⁻², … for which ε·χ̄ passes verify_contact.

    Raises:
        NoEpsilonFound: no ladder step passes.
    """
    last = None
    for step in range(1, ladder + 1):
        eps = 2.0 ** (-step)
        last = verify_contact(form, chart, chi_bar.scaled(eps), grid)
        if last.passed:
            last.epsilon = eps
            logger.info("find_epsilon %s: eps=%g after %d steps", form.name, eps, step)
            return EpsilonCertificate(eps, step, last)
    raise NoEpsilonFound(ladder, last)


def volume_inequality_check(form, chart, chi, C: float, grid: GridSpec) -> InequalityReport:
    """α_χ∧dα_χ ≥ C·ρ*α∧ρ*dα on every grid cell."""
    if not 0.0 < C < 1.0:
        raise ValueError(f"C must lie in (0, 1), got {C}")
    t, r, th = grid.mesh()
    big_g, big_h, *_ = SmoothedForm(form, chart, chi).decomposition(t, r, th)
    margin = big_g + big_h - C * big_g
    bad = margin < 0.0
    return InequalityReport(
        passed=not bool(np.any(bad)),
        C=C,
        min_margin=float(np.min(margin)),
        violations=_cells(bad, t, r, th, margin) if np.any(bad) else [],
    )


def annulus_flux(form: ChartContactForm, t0: float, eps: float, samples: int = FLUX_SAMPLES) -> float:
    """∮ α over the circle r = ε in the disk {t = t0} (uniform quadrature)."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"radius must lie in (0, 1), got {eps}")
    th = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    b = form.b_fn(np.full_like(th, t0), np.full_like(th, eps), th)
    return float(TWO_PI * np.mean(b))


def flux_exponent(form: ChartContactForm, t0: float = 0.0, eps_values=(0.2, 0.1, 0.05, 0.025)) -> float:
    """Log-log slope of |annulus_flux| against ε."""
    eps = np.asarray(eps_values, dtype=float)
    flux = np.abs([annulus_flux(form, t0, e) for e in eps])
    if np.all(flux < 1e-300):
        return math.inf
    slope, _ = np.polyfit(np.log(eps), np.log(np.maximum(flux, 1e-300)), 1)
    return float(slope)


def whitney_distance(f1, f2, grid: GridSpec) -> tuple[float, float]:
    """(sup |f1 − f2|, sup |df1 − df2|) over grid components."""
    t, r, th = grid.mesh()
    c1, c2 = f1.components(t, r, th), f2.components(t, r, th)
    d1, d2 = f1.exterior_derivative(t, r, th), f2.exterior_derivative(t, r, th)
    d0_form = max(float(np.max(np.abs(x - y))) for x, y in zip(c1, c2))
    d0_dform = max(float(np.max(np.abs(x - y))) for x, y in zip(d1, d2))
    return d0_form, d0_dform


def gray_bound(form: ChartContactForm, chart: SmoothingChart, grid: GridSpec) -> float:
    """max 4|θ̇| of the Reeb field of ρ*α over the grid.

    Raises:
        NonContactPoint: ρ*α is not contact somewhere on the grid.
    """
    t, r, th = grid.mesh()
    _, _, th_dot, dens = SmoothedForm(form, chart, None).reeb(t, r, th)
    if np.any(dens <= 0.0):
        i = np.unravel_index(int(np.argmin(dens)), dens.shape)
        raise NonContactPoint((float(t[i]), float(r[i]), float(th[i])), float(dens[i]))
    return float(4.0 * np.max(np.abs(th_dot)))


# ---------------------------------------------------------------------------
# Extended checks
# ---------------------------------------------------------------------------

def axis_decay(form, chart, chi, radii, n_t: int = 8, n_theta: int = 32) -> np.ndarray:
    """sup over t, θ of |ṙ| + r|θ̇| of the Reeb field of α_χ at each radius."""
    radii = np.asarray(radii, dtype=float)
    t = np.linspace(0.0, 1.0, n_t, endpoint=False)
    th = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    T, R, TH = np.meshgrid(t, radii, th, indexing="ij")
    _, r_dot, th_dot, _ = SmoothedForm(form, chart, chi).reeb(T, R, TH)
    return np.max(np.abs(r_dot) + R * np.abs(th_dot), axis=(0, 2))


@dataclass
class FamilyReport:
    passed: bool
    s_values: list
    min_density: list
    failing_s: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "s": self.s_values, "min_density": self.min_density,
                "failing_s": self.failing_s}


def twisted_form_check(form, chart, chi, twist: int, grid: GridSpec, s_values=None) -> FamilyReport:
    """Contactness of ρ*α + χ·(dθ + 2π·twist·s·dt) along s ∈ [0, 1]."""
    s_values = list(np.linspace(0.0, 1.0, 5) if s_values is None else s_values)
    t, r, th = grid.mesh()
    sf = SmoothedForm(form, chart, chi)
    u, a, b = sf.components(t, r, th)
    w_tr, w_tth, w_rth = sf.exterior_derivative(t, r, th)
    chi_v, dchi = _chi(chi, r)
    mins, failing = [], []
    for s in s_values:
        k = TWO_PI * twist * s
        dens = volume_density((u + k * chi_v, a, b), (w_tr - k * dchi, w_tth, w_rth))
        m = float(np.min(dens))
        mins.append(m)
        if m <= 0.0:
            failing.append(float(s))
    return FamilyReport(not failing, [float(s) for s in s_values], mins, failing)


def convex_family_check(form, chart, chi_a, chi_b, C: float, grid: GridSpec, s_values=None) -> FamilyReport:
    """Volume inequality along χ_s = (1 − s) χ_a + s χ_b."""
    s_values = list(np.linspace(0.0, 1.0, 5) if s_values is None else s_values)
    mins, failing = [], []
    for s in s_values:
        rep = volume_inequality_check(form, chart, ProfileBlend(chi_a, chi_b, float(s)), C, grid)
        mins.append(rep.min_margin)
        if not rep.passed:
            failing.append(float(s))
    return FamilyReport(not failing, [float(s) for s in s_values], mins, failing)


def t_component_bound(form, chart, chi, grid: GridSpec) -> dict:
    """min over the grid of dt(R_χ) / dt(R_ρ*α), on cells where ρ*α is contact."""
    t, r, th = grid.mesh()
    t_dot_chi, _, _, dens_chi = SmoothedForm(form, chart, chi).reeb(t, r, th)
    t_dot_0, _, _, dens_0 = SmoothedForm(form, chart, None).reeb(t, r, th)
    ok = (dens_0 > 0.0) & (dens_chi > 0.0) & (np.abs(t_dot_0) > 0.0)
    if not np.any(ok):
        raise NonContactPoint((0.0, grid.r_min, 0.0), float(np.min(dens_0)))
    ratio = np.where(ok, t_dot_chi / np.where(ok, t_dot_0, 1.0), np.inf)
    i = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
    return {"C": float(ratio[i]), "at": [float(t[i]), float(r[i]), float(th[i])]}


def estimate_lipschitz(form: ChartContactForm, radius: float = 1.0, n: int = 48, n_t: int = 8) -> float:
    """Max componentwise difference quotient of α in Cartesian (t, x, y) coordinates."""
    xs = np.linspace(-radius, radius, n if n % 2 == 0 else n + 1)
    ts = np.linspace(0.0, 1.0, n_t, endpoint=False)
    T, X, Y = np.meshgrid(ts, xs, xs, indexing="ij")
    R = np.hypot(X, Y)
    TH = np.arctan2(Y, X)
    u, a, b = form.components(T, R, TH)
    alpha_x = a * X / R - b * Y / R ** 2
    alpha_y = a * Y / R + b * X / R ** 2
    inside = R <= radius
    dx = xs[1] - xs[0]
    dt = ts[1] - ts[0]
    best = 0.0
    for comp in (u, alpha_x, alpha_y):
        for axis, step in ((0, dt), (1, dx), (2, dx)):
            q = np.abs(np.diff(comp, axis=axis)) / step
            both = inside.take(range(1, inside.shape[axis]), axis=axis) & \
                inside.take(range(0, inside.shape[axis] - 1), axis=axis)
            if np.any(both):
                best = max(best, float(np.max(q[both])))
    return best
