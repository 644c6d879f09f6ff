"""Quadratic complex Henon maps.

The map is f(z, w) = (z^2 + c + a*w, z), a polynomial automorphism of C^2
with constant Jacobian -a.  This module holds the map itself, its inverse,
fixed-point data, the filtration radius used for rigorous escape detection,
the semi-parabolic parameter locus c = (1-a)^2/4, the quadratic normal-form
chart at a semi-parabolic fixed point, and the epsilon-perturbation family
used for implosion experiments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

DEGREE = 2

# |multiplier - 1| below this counts as neutral
MULTIPLIER_TOL = 1e-9

_RADIUS_SAFETY = 2.0
_RADIUS_FLOOR = 2.0


class NotSemiParabolicError(ValueError):
    """Raised when an operation needs a semi-parabolic fixed point and none exists."""


@dataclass(frozen=True)
class Point2:
    """Point (z, w) of C^2.  ``escaped`` flags an overflow result; only then
    may the components be non-finite."""

    z: complex
    w: complex
    escaped: bool = False

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.z) and np.isfinite(self.w))


def _filtration_radius(c: complex, a: complex) -> float:
    # Larger root of R^2 - (1+|a|)R - |c| = 0: beyond it,
    # |z| > max(|w|, R) forces |z^2 + c + a w| > |z|.
    s = 1.0 + abs(a)
    root = 0.5 * (s + math.sqrt(s * s + 4.0 * abs(c)))
    return max(_RADIUS_SAFETY * root, _RADIUS_FLOOR)


@dataclass(frozen=True)
class HenonMap:
    """f(z, w) = (z^2 + c + a*w, z) with a != 0.

    R is the cached filtration radius; it is computed on construction when
    not supplied.
    """

    c: complex
    a: complex
    R: float = 0.0
    degree: int = DEGREE

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("parameter a must be nonzero")
        if self.R <= 0.0:
            object.__setattr__(self, "R", _filtration_radius(self.c, self.a))

    @property
    def dissipative(self) -> bool:
        return abs(self.a) < 1.0


def filtration_radius(m: HenonMap) -> float:
    """Radius R with f(V+_R) inside V+_R and f^-1(V-_R) inside V-_R."""
    return m.R


def eval_forward(m: HenonMap, p: Point2) -> Point2:
    """One forward step.  Overflow returns an escaped-flagged point, never a
    silent NaN."""
    if p.escaped:
        return p
    z = p.z * p.z + m.c + m.a * p.w
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        return Point2(z, p.z, escaped=True)
    return Point2(z, p.z)


def eval_inverse(m: HenonMap, q: Point2) -> Point2:
    """One backward step: f^-1(z, w) = (w, (z - w^2 - c)/a)."""
    if q.escaped:
        return q
    w = (q.z - q.w * q.w - m.c) / m.a
    if not (np.isfinite(w.real) and np.isfinite(w.imag)):
        return Point2(q.w, w, escaped=True)
    return Point2(q.w, w)


def step_many(m: HenonMap, z: np.ndarray, w: np.ndarray):
    """Vectorized forward step on coordinate arrays (no overflow checks)."""
    return z * z + m.c + m.a * w, z


def istep_many(m: HenonMap, z: np.ndarray, w: np.ndarray):
    """Vectorized backward step on coordinate arrays."""
    return w, (z - w * w - m.c) / m.a


def semi_parabolic_parameter(a: complex) -> complex:
    """The unique c for which the fixed-point multipliers are {1, -a}."""
    r = abs(a)
    if r == 0.0:
        raise ValueError("a must be nonzero")
    if r >= 1.0:
        raise ValueError("need |a| < 1 (dissipative)")
    return (1.0 - a) ** 2 / 4.0


def semi_parabolic_map(a: complex) -> HenonMap:
    """The Henon map with a semi-parabolic fixed point, for 0 < |a| < 1."""
    return HenonMap(semi_parabolic_parameter(a), a)


@dataclass(frozen=True)
class FixedPointInfo:
    location: Point2
    multipliers: tuple[complex, complex]
    semi_parabolic: bool
    multiplicity: int = 1


def _multipliers_at(x: complex, a: complex) -> tuple[complex, complex]:
    # Eigenvalues of [[2x, a], [1, 0]]: roots of t^2 - 2x t - a = 0.
    d = np.sqrt(complex(x * x + a))
    return (complex(x + d), complex(x - d))


def fixed_points(m: HenonMap) -> list[FixedPointInfo]:
    """Both fixed points (x, x), with x solving x^2 + (a-1)x + c = 0.

    A coincident pair is reported once with multiplicity 2.
    """
    b = m.a - 1.0
    disc = np.sqrt(complex(b * b - 4.0 * m.c))
    roots = [(-b + disc) / 2.0, (-b - disc) / 2.0]
    if abs(roots[0] - roots[1]) <= MULTIPLIER_TOL:
        roots = [roots[0]]
    out = []
    for x in roots:
        lams = _multipliers_at(x, m.a)
        neutral = min(abs(lams[0] - 1.0), abs(lams[1] - 1.0)) <= MULTIPLIER_TOL
        other = lams[1] if abs(lams[0] - 1.0) <= abs(lams[1] - 1.0) else lams[0]
        semi = bool(neutral and abs(other) < 1.0)
        out.append(
            FixedPointInfo(
                location=Point2(complex(x), complex(x)),
                multipliers=lams,
                semi_parabolic=semi,
                multiplicity=1 if len(roots) == 2 else 2,
            )
        )
    return out


@dataclass(frozen=True)
class LocalChart:
    """Polynomial chart at a semi-parabolic fixed point.

    forward() sends the fixed point to the origin, diagonalizes the
    differential to diag(lam1, lam2) with lam1 ~ 1, rescales so the center
    quadratic coefficient is exactly 1, and applies a quadratic shear that
    removes the remaining non-resonant quadratic terms.  In the chart the
    map reads

        zeta -> zeta + zeta^2 + c3*zeta^3 + ...,   mu -> lam2*mu + O(zeta*mu).

    inverse() undoes the chart exactly on the chart neighborhood (the shear
    is inverted by fixed-point iteration).
    """

    fixed_point: complex
    lam1: complex
    lam2: complex
    sigma: complex          # center rescaling, lam1^2 / (lam1 - lam2)
    shear_p: complex        # zeta*mu term removed from the center row
    shear_q: complex        # mu^2 term removed from the center row
    shear_r: complex        # zeta^2 term removed from the contracting row
    shear_s: complex        # mu^2 term removed from the contracting row
    c3: complex = 0.0

    @property
    def cubic_center_coefficient(self) -> complex:
        return self.c3

    @property
    def b(self) -> complex:
        return self.lam2

    def forward_many(self, z, w):
        x = self.fixed_point
        delta = self.lam1 - self.lam2
        u = z - x
        v = w - x
        xi = (u - self.lam2 * v) / delta
        eta = (-u + self.lam1 * v) / delta
        zeta = self.sigma * xi
        mu = self.sigma * eta
        zh = zeta + self.shear_p * zeta * mu + self.shear_q * mu * mu
        mh = mu + self.shear_r * zeta * zeta + self.shear_s * mu * mu
        return zh, mh

    def forward(self, p: Point2) -> tuple[complex, complex]:
        zh, mh = self.forward_many(np.asarray(p.z), np.asarray(p.w))
        return complex(zh), complex(mh)

    def inverse_many(self, zeta_h, mu_h):
        # Exact local inverse of the shear by fixed-point iteration; the
        # iteration contracts for |zeta|, |mu| below ~0.15 with the shear
        # sizes arising from dissipative parameters.
        zeta_h = np.asarray(zeta_h, dtype=complex)
        mu_h = np.asarray(mu_h, dtype=complex)
        zeta, mu = zeta_h, mu_h
        for _ in range(24):
            zeta = zeta_h - self.shear_p * zeta * mu - self.shear_q * mu * mu
            mu = mu_h - self.shear_r * zeta * zeta - self.shear_s * mu * mu
        xi = zeta / self.sigma
        eta = mu / self.sigma
        u = self.lam1 * xi + self.lam2 * eta
        v = xi + eta
        return self.fixed_point + u, self.fixed_point + v

    def inverse(self, zeta_h: complex, mu_h: complex) -> Point2:
        z, w = self.inverse_many(np.asarray(zeta_h), np.asarray(mu_h))
        return Point2(complex(z), complex(w))


def center_axis_jet(chart: LocalChart, m: HenonMap, order: int = 3,
                    radius: float = 0.05, nodes: int = 16) -> np.ndarray:
    """Taylor coefficients c_0..c_order of the conjugated map restricted to
    the center axis, zeta -> chart(f(chart^-1(zeta, 0)))_center.

    The composition is polynomial of degree <= 8, so 16 circle nodes give the
    coefficients exactly up to rounding.
    """
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    zs = radius * np.exp(1j * theta)
    pz, pw = chart.inverse_many(zs, np.zeros_like(zs))
    fz, fw = step_many(m, pz, pw)
    vals, _ = chart.forward_many(fz, fw)
    coeffs = np.fft.fft(vals) / nodes
    ks = np.arange(order + 1)
    return coeffs[: order + 1] / radius ** ks


def local_chart(m: HenonMap) -> LocalChart:
    """Build the quadratic normal-form chart; fails without a multiplier
    within MULTIPLIER_TOL of 1."""
    candidates = [fp for fp in fixed_points(m)
                  if min(abs(l - 1.0) for l in fp.multipliers) <= MULTIPLIER_TOL]
    if not candidates:
        raise NotSemiParabolicError(
            "map has no fixed point with a multiplier within %.1e of 1" % MULTIPLIER_TOL
        )
    fp = candidates[0]
    lams = sorted(fp.multipliers, key=lambda l: abs(l - 1.0))
    lam1 = lams[0]
    lam2 = -m.a / lam1  # multiplier product is -a
    if abs(lam2) >= 1.0:
        raise NotSemiParabolicError("second multiplier is not contracting")
    x = fp.location.z
    delta = lam1 - lam2
    sigma = lam1 * lam1 / delta

    # After diagonalizing and rescaling by sigma the quadratic part is
    #   zeta' = lam1*zeta + (zeta + rho*mu)^2,  mu' = lam2*mu - (zeta + rho*mu)^2
    # with rho = lam2/lam1.  The shear solves the homological equations for
    # the removable monomials; zeta^2 (center) and zeta*mu (contracting) are
    # resonant and stay.
    rho = lam2 / lam1
    B = 2.0 * rho
    C = rho * rho
    D = -1.0
    F = -C
    p = B / (lam1 * (1.0 - lam2))
    q = C / (lam1 - lam2 * lam2)
    r = D / (lam2 - lam1 * lam1)
    s = F / (lam2 * (1.0 - lam2))

    chart = LocalChart(
        fixed_point=x, lam1=lam1, lam2=lam2, sigma=sigma,
        shear_p=p, shear_q=q, shear_r=r, shear_s=s,
    )
    jet = center_axis_jet(chart, m, order=3)
    if abs(jet[2] - 1.0) > 1e-9:
        raise NotSemiParabolicError(
            "chart normalization failed: center quadratic coefficient %r" % jet[2]
        )
    return replace(chart, c3=complex(jet[3]))


def perturbed_family(m: HenonMap, eps: float) -> HenonMap:
    """Shift c so the chart-level center dynamics reads
    zeta -> zeta + zeta^2 + eps^2 + h.o.t.

    A constant dc in the first map component becomes sigma*dc/(lam1-lam2)
    in the center coordinate, so dc = eps^2 * (lam1-lam2)^2 / lam1^2.
    """
    if not 0.0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 0.5]")
    if eps == 0.0:
        return m
    chart = local_chart(m)  # validates semi-parabolicity
    delta = chart.lam1 - chart.lam2
    dc = eps * eps * delta * delta / (chart.lam1 * chart.lam1)
    return HenonMap(m.c + dc, m.a)


# --- JSON wire format: complex numbers on disk are [re, im] pairs ---

def c2pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def pair2c(p) -> complex:
    return complex(float(p[0]), float(p[1]))


def map_to_dict(m: HenonMap) -> dict:
    return {"c": c2pair(m.c), "a": c2pair(m.a)}


def map_from_dict(d: dict) -> HenonMap:
    return HenonMap(pair2c(d["c"]), pair2c(d["a"]))


def map_to_json(m: HenonMap) -> str:
    return json.dumps(map_to_dict(m))


def map_from_json(text: str) -> HenonMap:
    return map_from_dict(json.loads(text))
