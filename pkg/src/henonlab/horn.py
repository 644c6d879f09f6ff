"""Lifted horn map H = phi o psi, its cylinder quotient h, critical points,
univalent-island search, and repelling-cycle finding.

The generic search routines operate on any holomorphic callable over arrays
(NaN marks out-of-domain), so the self-test models (z -> 2z lifted / zeta^2 on
the cylinder, or z -> z^2 as a plane map) run through the same code paths as
the Henon horn map itself.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass

import numpy as np

from .henon import HenonMap, c2pair
from .fatou import (FatouEvaluator, ConvergenceError, in_basin_many,
                    incoming_coordinate_many, outgoing_param_many)
from .contours import (marching_squares, winding_number, point_in_polygon,
                       resample_closed, polygon_centroid)

DEFAULT_BASIN_ITER = 4000
DERIV_RADIUS = 0.05
DERIV_NODES = 64
NEWTON_MAX = 50
NEWTON_TOL = 1e-12
RESIDUAL_KEEP = 1e-9
ISLAND_CELLS_PER_UNIT = 256
BOUNDARY_NODES = 256


class HornDomainError(ValueError):
    """The requested point is outside the domain of the horn map."""


def lifted_horn_many(ev: FatouEvaluator, m: HenonMap, zs,
                     basin_max_iter: int = DEFAULT_BASIN_ITER):
    """H(z) = phi(psi(z)) over an array; NaN where psi(z) leaves the basin."""
    zs = np.asarray(zs, dtype=complex).ravel()
    vals = np.full(zs.size, np.nan, dtype=complex)
    finite = np.isfinite(zs)
    if not finite.any():
        return vals
    pz, pw, okp, _, _ = outgoing_param_many(ev, m, np.where(finite, zs, 0.0))
    okp &= finite
    mask = okp & in_basin_many(m, np.where(okp, pz, 0.0), np.where(okp, pw, 0.0),
                               basin_max_iter, ev.chart)
    if mask.any():
        phi, okf, _, _ = incoming_coordinate_many(ev, m, pz[mask], pw[mask])
        vals[mask] = np.where(okf, phi, np.nan)
    return vals


def lifted_horn(ev: FatouEvaluator, m: HenonMap, z: complex,
                basin_max_iter: int = DEFAULT_BASIN_ITER) -> complex:
    """H(z); raises HornDomainError outside the domain, ConvergenceError on
    numerical failure inside it."""
    pz, pw, okp, _, resid = outgoing_param_many(ev, m, [z])
    if not okp[0]:
        raise ConvergenceError("psi did not stabilize at z=%r" % z,
                               residual=resid[0])
    if not in_basin_many(m, pz, pw, basin_max_iter, ev.chart)[0]:
        raise HornDomainError("psi(%r) is not in the parabolic basin" % z)
    phi, okf, _, resid = incoming_coordinate_many(ev, m, pz, pw)
    if not okf[0]:
        raise ConvergenceError("phi limit failed at psi(%r)" % z,
                               residual=resid[0])
    return complex(phi[0])


def horn_callable(ev: FatouEvaluator, m: HenonMap,
                  basin_max_iter: int = DEFAULT_BASIN_ITER):
    """The lifted horn map as an array callable for the search routines."""
    def fn(zs):
        return lifted_horn_many(ev, m, zs, basin_max_iter)
    return fn


# --- cylinder quotient ---

CYL_ZERO = 0j
CYL_INF = complex("inf")


@dataclass(frozen=True)
class CylinderPoint:
    """Point of the horn-map cylinder: zeta = exp(2 pi i z), ends 0 and inf."""

    zeta: complex
    lift: complex | None = None

    @staticmethod
    def from_lift(z: complex) -> "CylinderPoint":
        return CylinderPoint(zeta=cmath.exp(2j * cmath.pi * z), lift=z)

    @staticmethod
    def from_zeta(zeta: complex) -> "CylinderPoint":
        if zeta == 0 or not np.isfinite(abs(zeta)):
            return CylinderPoint(zeta=zeta)
        lift = cmath.log(zeta) / (2j * cmath.pi)
        return CylinderPoint(zeta=zeta, lift=lift)

    @property
    def is_end(self) -> bool:
        return self.zeta == 0 or not np.isfinite(abs(self.zeta))


def _canonical_lift(z: complex) -> complex:
    return complex(z.real - np.floor(z.real), z.imag)


def horn_cyl(ev: FatouEvaluator, m: HenonMap, p: CylinderPoint,
             basin_max_iter: int = DEFAULT_BASIN_ITER) -> CylinderPoint:
    """Horn map on the cylinder; fixes the ends 0 and inf symbolically.

    The lift is reduced to Re in [0, 1) before evaluation, so equivalent
    lifts give bit-identical results.
    """
    if p.is_end:
        return p
    lift = p.lift if p.lift is not None else CylinderPoint.from_zeta(p.zeta).lift
    val = lifted_horn(ev, m, _canonical_lift(lift), basin_max_iter)
    return CylinderPoint.from_lift(val)


# --- derivative by Cauchy integral ---

def cauchy_derivative(fn, centers, radius: float = DERIV_RADIUS,
                      nodes: int = DERIV_NODES):
    """f'(center) via the Cauchy integral on |w - center| = radius,
    trapezoid rule with the given node count.  NaN where any node is
    out of domain."""
    centers = np.asarray(centers, dtype=complex).ravel()
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    ring = radius * np.exp(1j * theta)
    grid = centers[:, None] + ring[None, :]
    vals = fn(grid.ravel()).reshape(grid.shape)
    derivs = (vals * np.exp(-1j * theta)[None, :]).mean(axis=1) / radius
    derivs[~np.isfinite(vals).all(axis=1)] = np.nan
    return derivs


def horn_derivative(ev: FatouEvaluator, m: HenonMap, z: complex,
                    radius: float = DERIV_RADIUS,
                    nodes: int = DERIV_NODES) -> complex:
    """H'(z) by the Cauchy integral; fails if the disk leaves the domain."""
    d = cauchy_derivative(horn_callable(ev, m), [z], radius, nodes)[0]
    if not np.isfinite(d):
        raise HornDomainError(
            "derivative disk of radius %g at %r leaves the horn domain"
            % (radius, z))
    return complex(d)


# --- island search ---

@dataclass(frozen=True)
class Island:
    """Numerical witness of a univalent preimage of D(center, radius)."""

    boundary: np.ndarray          # (k, 2) lift-coordinate polyline, closed
    target_center: complex
    target_radius: float
    degree: int

    def to_dict(self) -> dict:
        return {
            "center": c2pair(self.target_center),
            "radius": float(self.target_radius),
            "degree": int(self.degree),
            "boundary": [[float(x), float(y)] for x, y in self.boundary],
        }


def _refine_boundary(fn, poly, z0, r, iters: int = 4):
    """Move polyline vertices along their normals onto |fn - z0| = r."""
    pts = poly[:, 0] + 1j * poly[:, 1]
    tangent = np.roll(pts, -1) - np.roll(pts, 1)
    normal = 1j * tangent / np.abs(tangent)
    h = max(1e-4, 0.02 * r)
    t0 = np.zeros(pts.size)
    t1 = np.full(pts.size, h)
    g0 = np.abs(fn(pts) - z0) - r
    g1 = np.abs(fn(pts + h * normal) - z0) - r
    for _ in range(iters):
        denom = g1 - g0
        denom = np.where(np.abs(denom) > 1e-300, denom, 1.0)
        t2 = t1 - g1 * (t1 - t0) / denom
        t2 = np.clip(t2, -5 * h, 5 * h)
        g2 = np.abs(fn(pts + t2 * normal) - z0) - r
        t0, g0, t1, g1 = t1, g1, t2, g2
    out = pts + t1 * normal
    return np.stack([out.real, out.imag], axis=1), np.abs(g1)


def find_islands_for_map(fn, z0: complex, r: float, window,
                         resolution: int | None = None,
                         boundary_nodes: int = BOUNDARY_NODES):
    """Connected components of {|fn - z0| < r} compactly inside the window,
    kept when the boundary image winds exactly once around z0.

    window = (x0, x1, y0, y1) in lift coordinates.  Returns Island list sorted
    by centroid.
    """
    if r <= 0:
        raise ValueError("target radius must be positive")
    x0, x1, y0, y1 = window
    if resolution is None:
        nx = max(48, int(ISLAND_CELLS_PER_UNIT * (x1 - x0)))
        ny = max(48, int(ISLAND_CELLS_PER_UNIT * (y1 - y0)))
    else:
        nx = ny = int(resolution)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)
    vals = fn((X + 1j * Y).ravel()).reshape(ny, nx)
    g = np.abs(vals - z0) - r
    loops, _ = marching_squares(g, xs, ys, 0.0, valid=np.isfinite(g))

    dx = (x1 - x0) / (nx - 1)
    dy = (y1 - y0) / (ny - 1)
    islands = []
    for loop in loops:
        # compact inclusion: stay a cell away from the window edge
        if (loop[:, 0].min() <= x0 + dx or loop[:, 0].max() >= x1 - dx
                or loop[:, 1].min() <= y0 + dy or loop[:, 1].max() >= y1 - dy):
            continue
        poly = resample_closed(loop, boundary_nodes)
        poly, gerr = _refine_boundary(fn, poly, z0, r)
        bvals = fn(poly[:, 0] + 1j * poly[:, 1])
        if not np.isfinite(bvals).all():
            continue
        if np.max(np.abs(np.abs(bvals - z0) - r)) > 1e-3 * r:
            continue
        deg = winding_number(bvals, z0)
        if deg != 1:
            continue
        islands.append(Island(boundary=poly, target_center=complex(z0),
                              target_radius=float(r), degree=int(deg)))
    islands.sort(key=lambda isl: polygon_centroid(isl.boundary))
    return islands


def find_islands(ev: FatouEvaluator, m: HenonMap, z0: complex, r: float,
                 window, resolution: int | None = None,
                 coarse_tolerance: float = 1e-6,
                 refine_tolerance: float = 1e-7):
    """Island search for the lifted horn map of m over a lift window.

    The grid pass runs at a relaxed Fatou tolerance; boundary refinement and
    the winding audit re-evaluate at refine_tolerance (the smoothness floor
    near the domain boundary, see repelling_cycles).
    """
    coarse = horn_callable(ev.with_tolerance(coarse_tolerance), m)
    fine = horn_callable(ev.with_tolerance(refine_tolerance), m)

    def fn(zs):
        zs = np.asarray(zs, dtype=complex)
        return coarse(zs) if zs.size > 4 * BOUNDARY_NODES else fine(zs)

    return find_islands_for_map(fn, z0, r, window, resolution)


def injectivity_audit(fn, island: Island, pairs: int = 200, seed: int = 0,
                      min_sep: float = 1e-9) -> bool:
    """Sample point pairs inside the island; images must differ whenever the
    points are separated by more than min_sep."""
    rng = np.random.default_rng(seed)
    poly = island.boundary
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    pts = []
    attempts = 0
    while len(pts) < 2 * pairs and attempts < 200:
        cand = lo + (hi - lo) * rng.random((4 * pairs, 2))
        inside = point_in_polygon(poly, cand)
        pts.extend(cand[inside].tolist())
        attempts += 1
    if len(pts) < 2 * pairs:
        return False
    pts = np.array(pts[: 2 * pairs])
    a = pts[:pairs, 0] + 1j * pts[:pairs, 1]
    b = pts[pairs:, 0] + 1j * pts[pairs:, 1]
    va = fn(a)
    vb = fn(b)
    if not (np.isfinite(va).all() and np.isfinite(vb).all()):
        return False
    sep = np.abs(a - b) > min_sep
    return bool(np.all(np.abs(va[sep] - vb[sep]) > 0))


# --- repelling cycles ---

@dataclass(frozen=True)
class PeriodicPoint:
    zeta: complex
    period: int
    multiplier: complex
    lift: complex = 0j
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "zeta": c2pair(self.zeta),
            "lift": c2pair(self.lift),
            "period": int(self.period),
            "multiplier": c2pair(self.multiplier),
            "residual": float(self.residual),
        }


def _iterate_map(fn, zs, period: int):
    out = np.asarray(zs, dtype=complex).copy()
    for _ in range(period):
        out = fn(out)
    return out


def repelling_cycles_for_map(fn, period: int, window, seeds: int = 100,
                             deriv_radius: float = DERIV_RADIUS,
                             fine_fn=None, pregrid: int = 96):
    """Newton on H^period(z) - z - k from grid seeds; repelling roots only.

    Roots of the displacement H^period(z) - z lie where its imaginary part
    vanishes, so seeds are taken at sign changes of Im(H^period - id) on a
    dense pre-grid (falling back to the full grid when no crossing is seen).
    Each seed carries its own integer shift k = round(Re displacement); the
    translation constant of a lifted horn map depends on the normalization
    and varies near the domain boundary, so no global bound on k is imposed.
    Converged roots are deduplicated modulo 1, polished with fine_fn when
    given, filtered to minimal period and |multiplier| > 1, and sorted by
    (Re, Im) of the lift.
    """
    if period < 1:
        raise ValueError("period must be at least 1")
    x0, x1, y0, y1 = window
    side = max(pregrid, 2 * int(np.sqrt(seeds)))
    gx = np.linspace(x0, x1, side)
    gy = np.linspace(y0, y1, side)
    X, Y = np.meshgrid(gx, gy)
    zg = (X + 1j * Y).ravel()

    base = _iterate_map(fn, zg, period)
    disp = (base - zg).reshape(Y.shape)
    imd = np.where(np.isfinite(disp), disp.imag, np.nan)
    flips = np.zeros(Y.shape, dtype=bool)
    flips[:, :-1] |= imd[:, :-1] * imd[:, 1:] < 0
    flips[:-1, :] |= imd[:-1, :] * imd[1:, :] < 0
    cand = flips.ravel() & np.isfinite(base)
    if cand.sum() < max(4, seeds // 8):
        cand = np.isfinite(base)
    if not cand.any():
        return []
    z = zg[cand]
    k = np.round((base - zg)[cand].real)
    if z.size > seeds:
        pick = np.linspace(0, z.size - 1, seeds).astype(int)
        z, k = z[pick], k[pick]

    def newton(fun, z, k, sweeps, floor):
        # skip re-stepping points already at the evaluation jitter floor
        h = 1e-6
        for _ in range(sweeps):
            if z.size == 0:
                break
            Fz = _iterate_map(fun, z, period) - z - k
            aF = np.abs(Fz)
            good = np.isfinite(Fz)
            live = good & (aF > floor)
            if not live.any():
                break
            dplus = _iterate_map(fun, z[live] + h, period)
            dminus = _iterate_map(fun, z[live] - h, period)
            dF = (dplus - dminus) / (2 * h) - 1.0
            stepv = np.where(np.abs(dF) > 1e-14, Fz[live] / dF, np.nan)
            zn = z[live] - stepv
            znew = z.copy()
            znew[live] = zn
            # out-of-domain or runaway seeds abort silently
            ok = np.isfinite(znew)
            ok[live] &= np.abs(zn.imag) < 2 * max(abs(y0), abs(y1)) + 5
            z, k = znew[ok], k[ok]
        return z, k

    def dedup(roots, kk, residuals, tol=1e-6):
        order = np.lexsort((roots.imag, roots.real))
        roots, kk, residuals = roots[order], kk[order], residuals[order]
        uz, uk, ur = [], [], []
        for zc, kc, rc in zip(roots, kk, residuals):
            dup = False
            for i, zu in enumerate(uz):
                d = zc - zu
                if abs(d - round(d.real)) < tol:
                    dup = True
                    if rc < ur[i]:
                        uz[i], uk[i], ur[i] = zc, kc, rc
                    break
            if not dup:
                uz.append(zc)
                uk.append(kc)
                ur.append(rc)
        return (np.array(uz, complex), np.array(uk), np.array(ur))

    # sweep at the search accuracy, then certify at the polish accuracy
    z, k = newton(fn, z, k, NEWTON_MAX, NEWTON_TOL)
    Fz = _iterate_map(fn, z, period) - z - k
    good = np.isfinite(Fz) & (np.abs(Fz) < 1e-6)
    roots, kk = z[good], k[good]
    canon = roots.real - np.floor(roots.real) + 1j * roots.imag
    roots, kk, _ = dedup(canon, kk, np.abs(Fz[good]))

    polish = fine_fn or fn
    if fine_fn is not None and roots.size:
        roots, kk = newton(polish, roots, kk, 8, NEWTON_TOL)
    Fz = _iterate_map(polish, roots, period) - roots - kk
    good = np.isfinite(Fz) & (np.abs(Fz) < RESIDUAL_KEEP)
    roots, kk = roots[good], kk[good]
    canon = roots.real - np.floor(roots.real) + 1j * roots.imag
    uniq, _, ures = dedup(canon, kk, np.abs(Fz[good]))

    points = []
    for zc, rc in zip(uniq, ures):
        # minimal-period filter
        minimal = True
        for d in range(1, period):
            if period % d == 0:
                v = _iterate_map(polish, np.array([zc]), d)[0]
                if np.isfinite(v) and abs(v - zc - round((v - zc).real)) < 1e-9:
                    minimal = False
                    break
        if not minimal:
            continue
        orbit = [zc]
        for _ in range(period - 1):
            nxt = polish(np.array([orbit[-1]]))[0]
            orbit.append(_canonical_lift(nxt))
        # shrink the quadrature disk until it clears the fractal domain edge
        derivs = None
        for rad in (deriv_radius, deriv_radius / 4, deriv_radius / 16):
            trial = cauchy_derivative(polish, np.array(orbit), radius=rad)
            if np.isfinite(trial).all():
                derivs = trial
                break
        if derivs is None:
            continue
        mult = complex(np.prod(derivs))
        if abs(mult) <= 1.0 + 1e-6:
            continue
        points.append(PeriodicPoint(
            zeta=cmath.exp(2j * cmath.pi * zc), period=period,
            multiplier=mult, lift=complex(zc), residual=float(rc)))
    points.sort(key=lambda p: (p.lift.real, p.lift.imag))
    return points


def repelling_cycles(ev: FatouEvaluator, m: HenonMap, period: int, window,
                     seeds: int = 100, search_tolerance: float = 1e-7):
    """Repelling cycles of the Henon horn map inside a lift window.

    The whole search runs at search_tolerance.  Cycles concentrate near the
    fractal domain boundary, where the Fatou limits pass through a long
    near-parabolic transit; evaluated more tightly than ~1e-7 the limits dig
    into the rounding floor of that transit and stop being smooth in z, which
    breaks Newton polishing.  Residuals are certified against the same
    evaluation and reach ~1e-10 where the floor allows.
    """
    fn = horn_callable(ev.with_tolerance(search_tolerance), m)
    return repelling_cycles_for_map(fn, period, window, seeds)


# --- serialization ---

def islands_to_json(islands, path: str | None = None) -> str:
    text = json.dumps([isl.to_dict() for isl in islands], indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def islands_to_csv(islands, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("island,vertex_x,vertex_y\n")
        for i, isl in enumerate(islands):
            for x, y in isl.boundary:
                fh.write("%d,%r,%r\n" % (i, float(x), float(y)))


def cycles_to_json(points, path: str | None = None) -> str:
    text = json.dumps([p.to_dict() for p in points], indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text
