"""Dimension estimators and the Misiurewicz shooting solver.

Covers the Moran/Bowen pressure equation for conformal iterated function
systems built from islands, the log N / log c hyperbolic lower bound,
box-counting dimension of point clouds, and a Newton shooting solver that
moves a one-parameter family onto a critical-orbit relation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .horn import Island, cauchy_derivative
from .contours import point_in_polygon

BISECTION_TOL = 1e-12
SHOOT_TOL = 1e-10
SHOOT_MAX = 80


@dataclass(frozen=True)
class IFSBranch:
    """One branch of an expanding return system: the island, its return
    time, and |derivative| samples of the return map on it."""

    return_time: int
    derivative_samples: np.ndarray
    island: Island | None = None

    def __post_init__(self):
        samples = np.asarray(self.derivative_samples, dtype=float)
        object.__setattr__(self, "derivative_samples", samples)
        if self.return_time < 1:
            raise ValueError("return time must be positive")
        if samples.size == 0:
            raise ValueError("need at least one derivative sample")
        if not (samples > 1.0).all():
            raise ValueError("return map must be expanding: all samples > 1")


@dataclass(frozen=True)
class IFSSystem:
    branches: list

    def __post_init__(self):
        if len(self.branches) < 1:
            raise ValueError("need at least one branch")
        boxes = []
        for b in self.branches:
            if b.island is not None:
                poly = b.island.boundary
                boxes.append((poly[:, 0].min(), poly[:, 0].max(),
                              poly[:, 1].min(), poly[:, 1].max()))
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                if a[0] <= b[1] and b[0] <= a[1] and a[2] <= b[3] and b[2] <= a[3]:
                    raise ValueError("islands %d and %d overlap" % (i, j))

    def contractions(self, kind: str = "geometric"):
        """Per-branch contraction ratio of the inverse branch."""
        out = []
        for b in self.branches:
            s = b.derivative_samples
            if kind == "geometric":
                d = float(np.exp(np.mean(np.log(s))))
            elif kind == "min":
                d = float(s.min())
            elif kind == "max":
                d = float(s.max())
            else:
                raise ValueError(kind)
            out.append(1.0 / d)
        return np.array(out)


def ifs_from_islands(fn, islands, return_times=None, samples_per_island: int = 25,
                     seed: int = 0) -> IFSSystem:
    """Build an IFSSystem by sampling |fn'| inside each island."""
    rng = np.random.default_rng(seed)
    branches = []
    for i, isl in enumerate(islands):
        poly = isl.boundary
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        pts = []
        for _ in range(60):
            cand = lo + (hi - lo) * rng.random((4 * samples_per_island, 2))
            pts.extend(cand[point_in_polygon(poly, cand)].tolist())
            if len(pts) >= samples_per_island:
                break
        pts = np.array(pts[:samples_per_island])
        zs = pts[:, 0] + 1j * pts[:, 1]
        derivs = np.abs(cauchy_derivative(fn, zs,
                                          radius=0.2 * isl.target_radius))
        derivs = derivs[np.isfinite(derivs)]
        rt = 1 if return_times is None else return_times[i]
        branches.append(IFSBranch(return_time=rt, derivative_samples=derivs,
                                  island=isl))
    return IFSSystem(branches)


def _moran_root(ratios: np.ndarray) -> float:
    """Solve sum r_i^s = 1 on [0, 2] by bisection."""
    if (ratios >= 1.0).any():
        raise ValueError("all contraction ratios must be below 1")
    if ratios.size == 1:
        return 0.0
    def pressure(s):
        return float(np.sum(ratios ** s)) - 1.0
    lo, hi = 0.0, 2.0
    if pressure(hi) > 0.0:
        return 2.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if pressure(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BowenResult:
    dimension: float
    lower: float
    upper: float

    def to_dict(self):
        return {"dimension": self.dimension,
                "bracket": [self.lower, self.upper]}


def bowen_dimension(system: IFSSystem) -> BowenResult:
    """Moran-equation dimension of the limit set.

    The point estimate uses geometric-mean contractions; the bracket uses the
    worst and best derivative samples per branch.
    """
    est = _moran_root(system.contractions("geometric"))
    upper = _moran_root(system.contractions("min"))   # weakest expansion
    lower = _moran_root(system.contractions("max"))   # strongest expansion
    return BowenResult(dimension=est, lower=lower, upper=upper)


def hyperbolic_lower_bound(system: IFSSystem) -> float:
    """log N / log c with c the largest derivative sample over all branches."""
    n = len(system.branches)
    c = max(float(b.derivative_samples.max()) for b in system.branches)
    if c <= 1.0:
        raise ValueError("system is not expanding")
    return math.log(n) / math.log(c) if n > 1 else 0.0


# --- box-counting dimension ---

@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    bounding_box: tuple = field(default=None)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        if pts.size == 0:
            raise ValueError("point cloud must be nonempty")
        if self.bounding_box is None:
            object.__setattr__(self, "bounding_box",
                               (pts.min(axis=0), pts.max(axis=0)))
        else:
            lo, hi = self.bounding_box
            if (pts < np.asarray(lo) - 1e-12).any() or (pts > np.asarray(hi) + 1e-12).any():
                raise ValueError("points fall outside the bounding box")


@dataclass(frozen=True)
class BoxDimResult:
    dimension: float
    stderr: float
    scales: list
    counts: list

    def to_dict(self):
        return {"dimension": self.dimension, "stderr": self.stderr,
                "scales": self.scales, "counts": self.counts}


ANGLE_STEP_DEG = 15.0


def _grid_variants(pts, n_offsets, seed):
    """Anchored copies of the cloud under the grid-orientation group.

    Counting boxes on a rotated lattice equals counting the inversely-rotated
    cloud on the standard lattice.  A 15-degree orientation set is closed
    under the quarter-turn symmetry of the lattice, so rigid motions of the
    cloud permute the variants instead of changing the minimum count.
    Rotations are only meaningful for planar clouds; higher dimensions use
    offsets alone.
    """
    dim = pts.shape[1]
    rng = np.random.default_rng(seed)
    offsets = np.vstack([np.zeros((1, dim)),
                         rng.random((max(0, n_offsets - 1), dim))])
    variants = []
    if dim == 2:
        angles = np.deg2rad(np.arange(0.0, 90.0, ANGLE_STEP_DEG))
        for th in angles:
            c, s = np.cos(th), np.sin(th)
            rot = pts @ np.array([[c, s], [-s, c]])
            variants.append(rot - rot.min(axis=0))
    else:
        variants.append(pts - pts.min(axis=0))
    return variants, offsets


def box_dimension(cloud: PointCloud, scale_count: int = 6,
                  n_offsets: int = 2, seed: int = 0) -> BoxDimResult:
    """Least-squares slope of log(box count) against log(1/scale) over the
    dyadic scales 2^-k, k = 3 .. 3+scale_count.

    Boxes have absolute side 2^-k; the cloud is only translated, never
    rescaled.  Per scale the occupied-box count is minimized over a small
    family of grid orientations and offsets, which makes the covering
    estimate insensitive to rigid motions of the cloud.
    """
    if scale_count < 4:
        raise ValueError("need at least 4 scales")
    pts = cloud.points
    if pts.shape[0] < 100:
        raise ValueError("need at least 100 points")
    variants, offsets = _grid_variants(pts, n_offsets, seed)
    ks = list(range(3, 3 + scale_count + 1))
    dim = pts.shape[1]
    counts = []
    for k in ks:
        best = None
        for var in variants:
            scaled = var * (1 << k)
            stride = int(scaled.max()) + 3
            strides = np.array([stride ** j for j in range(dim)], dtype=np.int64)
            for off in offsets:
                cells = (scaled + off).astype(np.int64)
                n = int(np.unique(cells @ strides).size)
                best = n if best is None else min(best, n)
        counts.append(best)
    x = np.array(ks, dtype=float) * math.log(2.0)
    y = np.log(np.array(counts, dtype=float))
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("degenerate scale range")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - (ym + slope * (x - xm))
    dof = max(len(ks) - 2, 1)
    stderr = float(np.sqrt(np.sum(resid ** 2) / dof / sxx))
    return BoxDimResult(dimension=slope, stderr=stderr,
                        scales=[2.0 ** -k for k in ks], counts=counts)


def cloud_to_csv(cloud: PointCloud, path: str) -> None:
    np.savetxt(path, cloud.points, delimiter=",")


def cloud_from_csv(path: str) -> PointCloud:
    return PointCloud(np.loadtxt(path, delimiter=",", ndmin=2))


# --- Misiurewicz shooting ---

class ShootingError(RuntimeError):
    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


def _track_cycle(family, lam, z0, period, tol=1e-13):
    """Newton in z on family_lam^period(z) - z, started from z0."""
    z = z0
    h = 1e-7
    for _ in range(60):
        fz = z
        for _ in range(period):
            fz = family(lam, fz)
        r = fz - z
        if abs(r) < tol:
            return z
        fp = z + h
        for _ in range(period):
            fp = family(lam, fp)
        fm = z - h
        for _ in range(period):
            fm = family(lam, fm)
        d = (fp - fm) / (2 * h) - 1.0
        if d == 0:
            break
        z = z - r / d
    raise ShootingError("periodic point tracking failed at lambda=%r" % (lam,),
                        residual=abs(r))


def misiurewicz_shoot(family, lam0: complex, critical_point: complex, n: int,
                      cycle_seed: complex, period: int = 1,
                      tol: float = SHOOT_TOL) -> complex:
    """Find lambda near lam0 with family_lambda^(n+1)(critical) = a_lambda.

    a_lambda is the repelling periodic point continued from cycle_seed by
    Newton in z at every parameter step; the outer Newton runs in lambda with
    a central-difference derivative.  Divergence raises ShootingError with
    the residual and the lambda trace.
    """
    lam = complex(lam0)
    trace = [lam]

    def objective(l):
        a = _track_cycle(family, l, cycle_seed, period)
        v = critical_point
        for _ in range(n + 1):
            v = family(l, v)
        return v - a

    h = 1e-7
    res = None
    for _ in range(SHOOT_MAX):
        try:
            r = objective(lam)
        except ShootingError as e:
            raise ShootingError("cycle tracking lost during shooting",
                                residual=e.residual, trace=trace)
        res = abs(r)
        if res < tol:
            return lam
        d = (objective(lam + h) - objective(lam - h)) / (2 * h)
        if d == 0 or not np.isfinite(abs(d)):
            break
        lam = lam - r / d
        trace.append(lam)
        if not np.isfinite(abs(lam)):
            break
    raise ShootingError("shooting did not converge", residual=res, trace=trace)


def ifs_to_json(system: IFSSystem, path: str | None = None) -> str:
    recs = []
    for b in system.branches:
        rec = {"return_time": b.return_time,
               "derivative_samples": [float(v) for v in b.derivative_samples]}
        if b.island is not None:
            rec["island"] = b.island.to_dict()
        recs.append(rec)
    text = json.dumps({"branches": recs}, indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def ifs_from_json(text: str) -> IFSSystem:
    data = json.loads(text)
    branches = []
    for rec in data["branches"]:
        branches.append(IFSBranch(return_time=int(rec["return_time"]),
                                  derivative_samples=np.array(rec["derivative_samples"])))
    return IFSSystem(branches)
