# -*- coding: utf-8 -*-
"""
reebpa/local_models.py

Exact local models: the hyperbolic linear map A_λ, the standard n-pronged
pseudo-Anosov map obtained by lifting A_λ through the branched cover
π_n(r, θ) = (r, nθ/2), unit-roof suspensions, and hyperbolic torus
automorphisms used as census substrates.

Branch convention for π_n: angles are normalized to [0, 2π) and split into
n sectors of width 2π/n. In sector j the local angle ψ = nθ/2 − jπ lies in
[0, π), i.e. each sector is sent onto a closed half-plane. A_λ preserves both
half-planes, so it acts on ψ directly; the image is placed in sector j + k.
The lift is single valued for odd n as well, and continuous across sector
boundaries (ψ → π in sector j meets ψ = 0 in sector j + 1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from reebpa.errors import LatticeOverflow
from reebpa.expr_dsl import as_expression

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
INT63_MAX = 2 ** 63 - 1


# ---------------------------------------------------------------------------
# A_λ
# ---------------------------------------------------------------------------

def apply_A_lambda(lam: float, p) -> np.ndarray:
    """(x, y) ↦ (λx, y/λ). `p` may be a single point or an (..., 2) array."""
    if lam <= 1.0:
        raise ValueError(f"stretch must exceed 1, got {lam}")
    p = np.asarray(p, dtype=float)
    return np.stack([lam * p[..., 0], p[..., 1] / lam], axis=-1)


def _half_plane_image(psi: np.ndarray, lam: float):
    """Image angle and radial factor of A_λ on the upper half-plane at angle ψ."""
    c, s = np.cos(psi), np.sin(psi)
    psi_out = np.arctan2(s / lam, lam * c)
    scale = np.sqrt((lam * c) ** 2 + (s / lam) ** 2)
    return psi_out, scale


def branched_projection(n: int, r, theta):
    """π_n(r, θ) = (r, nθ/2 mod 2π) with θ taken in [0, 2π)."""
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    return np.asarray(r, dtype=float), np.mod(n * theta / 2.0, TWO_PI)


# ---------------------------------------------------------------------------
# Standard pseudo-Anosov map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StandardPAMap:
    """n-pronged map lifting A_λ, rotating the prongs by 2πk/n.

    Args:
        n:   number of prongs (≥ 2; n = 2 is the smooth hyperbolic case).
        k:   rotation, stored modulo n.
        lam: stretch factor λ > 1.
    """

    n: int
    k: int
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"prong count must be an integer >= 2, got {self.n}")
        if self.lam <= 1.0:
            raise ValueError(f"stretch must exceed 1, got {self.lam}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k) % int(self.n))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def sector_width(self) -> float:
        return TWO_PI / self.n

    def _polar(self, r, theta, lam: float, k: int):
        r = np.asarray(r, dtype=float)
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        j = np.floor(theta / self.sector_width)
        j = np.minimum(j, self.n - 1)              # θ rounding up to 2π
        psi = self.n * theta / 2.0 - j * math.pi
        psi_out, scale = _half_plane_image(psi, lam)
        theta_out = np.mod(self.sector_width * (j + k) + 2.0 * psi_out / self.n, TWO_PI)
        return r * scale, theta_out

    def apply_polar(self, r, theta):
        """Image of the polar point(s) (r, θ). The origin is fixed."""
        return self._polar(r, theta, self.lam, self.k)

    def apply_inverse_polar(self, r, theta):
        return self._polar(r, theta, 1.0 / self.lam, -self.k)

    def apply_cartesian(self, points) -> np.ndarray:
        """Vectorized map on an (..., 2) array of Cartesian points."""
        return self._cartesian(points, self.apply_polar)

    def apply_inverse_cartesian(self, points) -> np.ndarray:
        return self._cartesian(points, self.apply_inverse_polar)

    @staticmethod
    def _cartesian(points, polar_fn) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        r = np.hypot(p[..., 0], p[..., 1])
        theta = np.arctan2(p[..., 1], p[..., 0])
        r_out, th_out = polar_fn(r, theta)
        return np.stack([r_out * np.cos(th_out), r_out * np.sin(th_out)], axis=-1)

    def prong_rays(self) -> np.ndarray:
        """Angles of the n expanding prong rays."""
        return self.sector_width * np.arange(self.n)

    def prong_permutation(self) -> list[int]:
        """Index of the image of prong ray j."""
        return [(j + self.k) % self.n for j in range(self.n)]

    @property
    def planar_period(self):
        return None


def apply_standard_pa(m: StandardPAMap, p) -> tuple:
    """Polar image (r', θ') of the polar point p = (r, θ)."""
    r, theta = p
    r_out, th_out = m.apply_polar(r, theta)
    if np.ndim(r_out) == 0:
        return float(r_out), float(th_out)
    return r_out, th_out


# ---------------------------------------------------------------------------
# Torus automorphisms
# ---------------------------------------------------------------------------

def _check_int63(matrix, context: str):
    for row in matrix:
        for entry in row:
            if abs(entry) > INT63_MAX:
                raise LatticeOverflow(f"{context}: entry {entry} exceeds the signed 63-bit range")


def mat_mul(a, b) -> tuple:
    """Exact 2×2 integer product."""
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def mat_det(a) -> int:
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


@dataclass(frozen=True)
class TorusAutomorphism:
    """Hyperbolic element of GL(2, ℤ) acting on 𝕋² = ℝ²/ℤ².

    Entries are plain Python ints, so powers stay exact; anything leaving
    the signed 63-bit range is reported as LatticeOverflow.
    """

    matrix: tuple

    def __post_init__(self):
        m = tuple(tuple(int(v) for v in row) for row in self.matrix)
        if len(m) != 2 or any(len(row) != 2 for row in m):
            raise ValueError("torus automorphism needs a 2x2 integer matrix")
        object.__setattr__(self, "matrix", m)
        if abs(self.det) != 1:
            raise ValueError(f"|det A| must be 1, got det = {self.det}")
        if abs(self.trace) <= 2:
            raise ValueError(f"A is not hyperbolic: |tr A| = {abs(self.trace)} <= 2")
        _check_int63(m, "matrix")

    @classmethod
    def coerce(cls, value) -> "TorusAutomorphism":
        """Accept "a,b,c,d", a flat list or a nested 2×2 list."""
        if isinstance(value, TorusAutomorphism):
            return value
        if isinstance(value, str):
            value = [int(v) for v in value.replace(" ", "").split(",") if v]
        flat = list(np.asarray(value, dtype=object).reshape(-1))
        if len(flat) != 4:
            raise ValueError(f"expected four matrix entries, got {len(flat)}")
        a, b, c, d = (int(v) for v in flat)
        return cls(((a, b), (c, d)))

    @property
    def det(self) -> int:
        return mat_det(self.matrix)

    @property
    def trace(self) -> int:
        return self.matrix[0][0] + self.matrix[1][1]

    @property
    def is_orientation_preserving(self) -> bool:
        return self.det == 1

    @property
    def label(self) -> str:
        (a, b), (c, d) = self.matrix
        return f"{a},{b},{c},{d}"

    @property
    def stretch(self) -> float:
        """λ_A, the eigenvalue of largest modulus in absolute value."""
        tr = float(self.trace)
        return (abs(tr) + math.sqrt(tr * tr - 4.0 * self.det)) / 2.0

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvals(np.array(self.matrix, dtype=float)).real)

    def power(self, k: int) -> tuple:
        """Exact A^k for k ≥ 0 (k < 0 uses the integer inverse)."""
        base = self.matrix if k >= 0 else self.inverse_matrix
        result = ((1, 0), (0, 1))
        for _ in range(abs(int(k))):
            result = mat_mul(result, base)
            _check_int63(result, f"A^{k}")
        return result

    @property
    def inverse_matrix(self) -> tuple:
        (a, b), (c, d) = self.matrix
        s = self.det
        return ((d * s, -b * s), (-c * s, a * s))

    def apply_cartesian(self, points) -> np.ndarray:
        """A·p mod 1 on an (..., 2) array."""
        return np.mod(np.asarray(points, dtype=float) @ np.array(self.matrix, dtype=float).T, 1.0)

    def apply_inverse_cartesian(self, points) -> np.ndarray:
        return np.mod(np.asarray(points, dtype=float) @ np.array(self.inverse_matrix, dtype=float).T, 1.0)

    @property
    def planar_period(self):
        return 1.0


def count_fixed_points(A: TorusAutomorphism, k: int) -> int:
    """|det(A^k − I)|, the number of fixed points of A^k on 𝕋²."""
    if k < 1:
        raise ValueError(f"iterate must be >= 1, got {k}")
    (a, b), (c, d) = A.power(k)
    value = abs((a - 1) * (d - 1) - b * c)
    if value > INT63_MAX:
        raise LatticeOverflow(f"|det(A^{k} - I)| exceeds the signed 63-bit range")
    return value


# ---------------------------------------------------------------------------
# Suspension
# ---------------------------------------------------------------------------

BaseMap = Union[StandardPAMap, TorusAutomorphism]


@dataclass(frozen=True)
class SuspensionFlow:
    """Unit-roof suspension of a base map. Points are (s, p) with s ∈ [0, 1)."""

    base: BaseMap
    roof: object = 1

    def __post_init__(self):
        roof = as_expression(self.roof)
        if roof.free_variables() or roof.evaluate({}) != 1.0:
            raise ValueError(f"only the unit roof is supported, got '{roof.to_text()}'")

    def iterate_base(self, p, times: int) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        step = self.base.apply_cartesian if times >= 0 else self.base.apply_inverse_cartesian
        for _ in range(abs(times)):
            p = step(p)
        return p

    def closed_orbit_period(self, p, cap: int = 64, tol: float = 1e-9):
        """Smallest k ≤ cap with base^k(p) = p, or None."""
        p0 = np.asarray(p, dtype=float)
        q = p0
        period = self.base.planar_period
        for k in range(1, cap + 1):
            q = self.base.apply_cartesian(q)
            d = q - p0
            if period is not None:
                d = d - period * np.round(d / period)
            if np.max(np.abs(d)) < tol:
                return k
        return None


def suspension_flow(f: SuspensionFlow, x, T: float):
    """Flow ∂/∂s for time T, applying the base map at each integer crossing.

    Args:
        x: (s, p) with s ∈ [0, 1) and p a base point.
    Returns:
        (s', p') with s' ∈ [0, 1).
    """
    s, p = x
    total = float(s) + float(T)
    crossings = math.floor(total)
    s_out = total - crossings
    if s_out >= 1.0:        # rounding
        s_out, crossings = 0.0, crossings + 1
    return s_out, f.iterate_base(p, crossings)
