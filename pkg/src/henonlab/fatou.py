"""Fatou coordinates of a semi-parabolic Henon map.

Incoming side: on the parabolic basin, phi(p) = lim u_n - n - beta*log(u_n)
with u_n = -1/zeta(f^n(p)) in the normal-form chart and beta = 1 - c3.  The
partial limits carry a 1/u tail which is removed by the correction
phi_n + u_n*(phi_n - phi_{n-1}); the corrected sequence settles like
log(u)/u^2.

Outgoing side: psi(w) = lim_n f^n(seed(w - n)), seeding on the repelling axis
at the chart point (-1/U, 0) where U solves U - beta*Log(-U) = u.  A seed at
depth n evaluates psi at a parameter shifted by roughly a1/u (a map constant
over the seed depth), so the evaluation pre-shifts the argument by -a1/u with
a1 estimated once per evaluator.  The argument shift commutes with the Abel
relation f(psi(w)) = psi(w+1) exactly, which keeps the relation tight even
where |psi| is large and the raw truncation error would dominate.

Both limits stop at depths set by the tolerance alone and report the last
increment as the residual.  Past u ~ 4000 the partial limits sit on the
rounding floor of the long near-parabolic transit (which amplifies rounding
like u^3 eps), and a residual-triggered stop there would pick noise-driven
uneven depths for nearby points, making the values jittery; the
deterministic depth keeps the truncation error smooth in the input, which
the Newton solves on the horn map rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .henon import HenonMap, LocalChart, Point2, local_chart, step_many, c2pair

PETAL_RADIUS = 0.1            # |zeta| and |mu| bound of the chart petal
PETAL_UMIN = 1.0 / PETAL_RADIUS
BASIN_CONFIRM_U = 50.0        # reaching Re(-1/zeta) here certifies the basin
SEED_MIN_DEPTH = 32           # outgoing seeds keep Re(u) <= -(SEED_MIN_DEPTH - 1)
STRIDE = 16                   # incoming convergence checks every STRIDE steps
INCOMING_U_CAP = 4000.0       # depth cap of the incoming limit (see phase B)
_LADDER_FACTOR = 1.5


class ConvergenceError(RuntimeError):
    """A Fatou limit did not stabilize; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class FatouEvaluator:
    """Chart, normalization anchor and limit controls for one map.

    phi is normalized by phi(anchor) = 0; anchor_phi stores the raw limit at
    the anchor.  out_shift is the seed-depth correction coefficient a1 of the
    outgoing limit.  Both are filled by make_evaluator.
    """

    chart: LocalChart
    anchor: Point2
    beta: complex
    tolerance: float = 1e-9
    max_iter: int = 100000
    anchor_phi: complex = 0.0
    out_shift: complex = 0.0

    def with_tolerance(self, tolerance: float) -> "FatouEvaluator":
        """Derived evaluator sharing chart and anchor normalization."""
        return replace(self, tolerance=tolerance)


@dataclass(frozen=True)
class SigmaPoint:
    """A point psi(parameter) of the repelling parabolic curve."""

    parameter: complex
    point: Point2


def _petal(chart: LocalChart, z, w):
    """Petal membership and u = -1/zeta for coordinate arrays."""
    zeta, mu = chart.forward_many(z, w)
    az = np.abs(zeta)
    ok = (az > 0.0) & (az < PETAL_RADIUS) & (np.abs(mu) < PETAL_RADIUS)
    u = np.where(ok, -1.0 / np.where(ok, zeta, 1.0), 0.0)
    return ok & (u.real > PETAL_UMIN), u


def in_basin_many(m: HenonMap, z, w, max_iter: int = 2000,
                  chart: LocalChart | None = None) -> np.ndarray:
    """True where the forward orbit reaches the deep attracting petal."""
    chart = chart or local_chart(m)
    z = np.array(z, dtype=complex, copy=True)
    w = np.array(w, dtype=complex, copy=True)
    shape = z.shape
    z, w = z.ravel(), w.ravel()
    basin = np.zeros(z.size, dtype=bool)
    alive = np.isfinite(z) & np.isfinite(w)
    idx = np.where(alive)[0]
    zz, ww = z[idx], w[idx]
    for _ in range(max_iter + 1):
        if idx.size == 0:
            break
        pet, u = _petal(chart, zz, ww)
        deep = pet & (u.real >= BASIN_CONFIRM_U)
        escaped = np.abs(zz) > np.maximum(np.abs(ww), m.R)
        basin[idx[deep]] = True
        keep = ~deep & ~escaped
        if not keep.all():
            idx, zz, ww = idx[keep], zz[keep], ww[keep]
        zz, ww = step_many(m, zz, ww)
        bad = ~(np.isfinite(zz) & np.isfinite(ww))
        if bad.any():
            keep = ~bad
            idx, zz, ww = idx[keep], zz[keep], ww[keep]
    return basin.reshape(shape)


def in_basin(m: HenonMap, p: Point2, max_iter: int = 2000,
             chart: LocalChart | None = None) -> bool:
    """True iff the forward orbit of p settles into the attracting petal."""
    if p.escaped:
        return False
    return bool(in_basin_many(m, [p.z], [p.w], max_iter, chart)[0])


def _incoming_raw_many(ev: FatouEvaluator, m: HenonMap, z0, w0):
    """Un-normalized incoming limits.

    Returns (phi, ok, iters, resid) over the flattened input.  Points that
    escape or never reach the petal get ok=False and phi=nan.
    """
    chart, beta, tol = ev.chart, ev.beta, ev.tolerance
    z = np.array(z0, dtype=complex).ravel()
    w = np.array(w0, dtype=complex).ravel()
    n = z.size
    phi_out = np.full(n, np.nan, dtype=complex)
    ok = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=np.int64)
    resid = np.full(n, np.nan)

    # phase A: march everything forward until each point has either reached
    # the petal or failed; entered points keep advancing with the counter
    pet, _ = _petal(chart, z, w)
    entered = pet
    failed = ~np.isfinite(z) | ~np.isfinite(w)
    z = np.where(failed, 0.0, z)
    w = np.where(failed, 0.0, w)
    k = 0
    while not (entered | failed).all() and k < ev.max_iter:
        pend = ~entered & ~failed
        esc = pend & (np.abs(z) > np.maximum(np.abs(w), m.R))
        failed |= esc
        z = np.where(failed, 0.0, z)
        w = np.where(failed, 0.0, w)
        z, w = step_many(m, z, w)
        k += 1
        bad = ~np.isfinite(z) & ~entered
        failed |= bad
        z = np.where(failed, 0.0, z)
        w = np.where(failed, 0.0, w)
        pet, _ = _petal(chart, z, w)
        entered |= pet & ~failed
    if not entered.any():
        return phi_out, ok, iters, resid
    aidx = np.where(entered)[0]
    az = z[aidx]
    aw = w[aidx]
    k_entered = k

    # phase B: accumulate corrected Abel partial limits and stop at a depth
    # set by the tolerance alone.  A residual-threshold stop would trigger on
    # rounding noise at uneven depths for nearby points, making phi jittery;
    # the deterministic depth keeps the truncation error smooth in the input,
    # which downstream Newton solves on the horn map rely on.  The last
    # stride increment is reported as the residual.
    u_stop = min(INCOMING_U_CAP, max(300.0, (25.0 / tol) ** (1.0 / 3.0)))
    phi_prev = np.zeros(aidx.size, dtype=complex)
    snap = np.full(aidx.size, np.inf, dtype=complex)
    while aidx.size and k < ev.max_iter:
        zeta, _mu = chart.forward_many(az, aw)
        u = -1.0 / zeta
        phi = u - k - beta * np.log(u)
        star = phi + u * (phi - phi_prev)
        phi_prev = phi
        if k % STRIDE == 0:
            if k - k_entered >= 2 * STRIDE:
                done = u.real >= u_stop
                if done.any():
                    delta = np.abs(star - snap)
                    sel = aidx[done]
                    phi_out[sel] = star[done]
                    ok[sel] = True
                    iters[sel] = k
                    resid[sel] = delta[done]
                    keep = ~done
                    aidx, az, aw = aidx[keep], az[keep], aw[keep]
                    phi_prev, star = phi_prev[keep], star[keep]
                    snap = snap[keep]
            snap = star
        az, aw = step_many(m, az, aw)
        k += 1
    if aidx.size:
        # ran out of budget: report the last corrected value, not converged
        phi_out[aidx] = snap
        iters[aidx] = k
        resid[aidx] = np.abs(snap - phi_prev)
    return phi_out, ok, iters, resid


def incoming_coordinate_many(ev: FatouEvaluator, m: HenonMap, z0, w0):
    """Vectorized phi over coordinate arrays; returns (phi, ok, iters, resid)."""
    phi, ok, iters, resid = _incoming_raw_many(ev, m, z0, w0)
    return phi - ev.anchor_phi, ok, iters, resid


def incoming_coordinate(ev: FatouEvaluator, m: HenonMap, p: Point2) -> complex:
    """phi(p), normalized so phi(anchor) = 0.  Requires p in the basin."""
    phi, ok, _, resid = _incoming_raw_many(ev, m, [p.z], [p.w])
    if not ok[0]:
        raise ConvergenceError(
            "incoming Fatou limit did not converge (point outside the basin, "
            "or max_iter too small); last residual %r" % resid[0],
            residual=resid[0],
        )
    return complex(phi[0] - ev.anchor_phi)


def _seed_points(ev: FatouEvaluator, u):
    """Outgoing seeds: solve U - beta*Log(-U) = u, place (-1/U, 0) in the chart."""
    beta = ev.beta
    U = u + beta * np.log(-u)
    for _ in range(8):
        U = U - (U - beta * np.log(-U) - u) / (1.0 - beta / U)
    return ev.chart.inverse_many(-1.0 / U, np.zeros_like(U))


def _psi_at_depth(ev: FatouEvaluator, m: HenonMap, wt, base_depth: int,
                  shifted: bool = True):
    """Raw depth-n outgoing values for an array of parameters.

    The per-point depth is base_depth + ceil(Re w), so that w and w+1 share
    the same seed and differ by exactly one application of f.  When shifted,
    the argument is pre-corrected by -a1/u, which removes the leading
    seed-depth error as a parameter shift.
    """
    wt = np.asarray(wt, dtype=complex).ravel()
    if wt.size == 0:
        return wt.copy(), wt.copy()
    depth = (base_depth + np.ceil(wt.real)).astype(np.int64)
    u = wt - depth
    weff = wt - ev.out_shift / u if shifted else wt
    z, w = _seed_points(ev, weff - depth)
    z = np.asarray(z, dtype=complex).ravel()
    w = np.asarray(w, dtype=complex).ravel()
    kmax = int(depth.max())
    for k in range(kmax):
        act = k < depth
        zn, wn = step_many(m, z, w)
        z = np.where(act, zn, z)
        w = np.where(act, wn, w)
    return z, w


def _outgoing_depth(tolerance: float) -> int:
    """Seed depth as a function of tolerance alone.

    A residual-threshold ladder would pick uneven depths for nearby
    parameters once the transit rounding floor is reached, making psi
    jittery; the deterministic depth keeps the truncation smooth.
    """
    d = (25.0 / tolerance) ** (1.0 / 3.0)
    return int(min(20000.0, max(2.0 * SEED_MIN_DEPTH, d)))


def _outgoing_raw_many(ev: FatouEvaluator, m: HenonMap, wt):
    """psi on an array of parameters.

    Returns (z, w, ok, iters, resid).  The value is taken at the
    tolerance-derived depth; the residual is the difference against a
    shallower check depth (the achieved stabilization bound).
    """
    wt = np.array(wt, dtype=complex).ravel()
    depth = _outgoing_depth(ev.tolerance)
    check = max(SEED_MIN_DEPTH, int(depth / _LADDER_FACTOR))
    z, w = _psi_at_depth(ev, m, wt, depth)
    zc, wc = _psi_at_depth(ev, m, wt, check)
    resid = np.hypot(np.abs(z - zc), np.abs(w - wc))
    ok = np.isfinite(z) & np.isfinite(w)
    iters = np.full(wt.size, depth, dtype=np.int64)
    z = np.where(ok, z, np.nan)
    w = np.where(ok, w, np.nan)
    return z, w, ok, iters, resid


def outgoing_param_many(ev: FatouEvaluator, m: HenonMap, wt):
    """Vectorized psi; returns (z, w, ok, iters, resid)."""
    return _outgoing_raw_many(ev, m, wt)


def outgoing_param(ev: FatouEvaluator, m: HenonMap, w: complex) -> SigmaPoint:
    """psi(w): the point of the repelling curve with outgoing coordinate w."""
    z, ww, ok, _, resid = _outgoing_raw_many(ev, m, [w])
    if not ok[0]:
        raise ConvergenceError(
            "outgoing Fatou limit did not stabilize at w=%r; residual %r"
            % (w, resid[0]),
            residual=resid[0],
        )
    return SigmaPoint(parameter=complex(w), point=Point2(complex(z[0]), complex(ww[0])))


def _estimate_out_shift(ev: FatouEvaluator, m: HenonMap) -> complex:
    """Fit the seed-depth coefficient a1 from psi_D(w0) ~ Psi(w0) + Psi'(w0)*a1/u.

    Two passes: the second fits the slope left over after applying the first
    estimate, which suppresses contamination from higher-order terms.
    """
    w0 = 0.25 + 0.5j
    depths = [256, 384, 576, 864, 1296, 1944]
    h = 1e-3
    zp, wp = _psi_at_depth(ev, m, [w0 + h], depths[-1], shifted=False)
    zm, wm = _psi_at_depth(ev, m, [w0 - h], depths[-1], shifted=False)
    dz = (zp[0] - zm[0]) / (2 * h)
    dw = (wp[0] - wm[0]) / (2 * h)
    use_z = abs(dz) >= abs(dw)
    deriv = dz if use_z else dw

    shift = 0.0 + 0.0j
    for _ in range(2):
        xs, vals = [], []
        for D in depths:
            ev_try = replace(ev, out_shift=shift)
            z, w = _psi_at_depth(ev_try, m, [w0], D, shifted=True)
            xs.append(1.0 / (w0 - (D + 1)))
            vals.append(z[0] if use_z else w[0])
        xs = np.array(xs)
        A = np.stack([np.ones(xs.size), xs, xs * xs], axis=1)
        q = np.linalg.lstsq(A, np.array(vals), rcond=None)[0][1]
        shift += q / deriv
    return complex(shift)


def make_evaluator(m: HenonMap, tolerance: float = 1e-9, max_iter: int = 100000,
                   anchor: Point2 | None = None) -> FatouEvaluator:
    """Build the evaluator for a semi-parabolic map and fix phi(anchor) = 0."""
    chart = local_chart(m)
    beta = 1.0 - chart.c3
    if anchor is None:
        anchor = chart.inverse(-0.05, 0.0)
    ev = FatouEvaluator(chart=chart, anchor=anchor, beta=beta,
                        tolerance=tolerance, max_iter=max_iter)
    if not in_basin(m, anchor, max_iter=20000, chart=chart):
        raise ValueError("anchor is not in the parabolic basin")
    phi, ok, _, resid = _incoming_raw_many(ev, m, [anchor.z], [anchor.w])
    if not ok[0]:
        raise ConvergenceError("anchor normalization did not converge",
                               residual=resid[0])
    shift = _estimate_out_shift(ev, m)
    return replace(ev, anchor_phi=complex(phi[0]), out_shift=shift)


# --- batch file interface: JSON lists in, JSON records out ---

def evaluate_incoming_file(ev: FatouEvaluator, m: HenonMap,
                           in_path: str, out_path: str) -> None:
    """Read a JSON list of C^2 points [[z_re, z_im, w_re, w_im], ...] and write
    [{point, value, residual, iterations}, ...]."""
    pts = json.loads(open(in_path).read())
    zs = np.array([complex(p[0], p[1]) for p in pts])
    ws = np.array([complex(p[2], p[3]) for p in pts])
    phi, ok, iters, resid = incoming_coordinate_many(ev, m, zs, ws)
    recs = []
    for i in range(zs.size):
        recs.append({
            "point": [zs[i].real, zs[i].imag, ws[i].real, ws[i].imag],
            "value": c2pair(phi[i]) if ok[i] else None,
            "residual": None if np.isnan(resid[i]) else float(resid[i]),
            "iterations": int(iters[i]),
        })
    with open(out_path, "w") as fh:
        json.dump(recs, fh, indent=1)


def evaluate_outgoing_file(ev: FatouEvaluator, m: HenonMap,
                           in_path: str, out_path: str) -> None:
    """Read a JSON list of parameters [[re, im], ...] and write
    [{point, value, residual, iterations}, ...] with value the C^2 image."""
    ps = json.loads(open(in_path).read())
    wt = np.array([complex(p[0], p[1]) for p in ps])
    z, w, ok, iters, resid = outgoing_param_many(ev, m, wt)
    recs = []
    for i in range(wt.size):
        recs.append({
            "point": c2pair(wt[i]),
            "value": [z[i].real, z[i].imag, w[i].real, w[i].imag] if ok[i] else None,
            "residual": None if np.isnan(resid[i]) else float(resid[i]),
            "iterations": int(iters[i]),
        })
    with open(out_path, "w") as fh:
        json.dump(recs, fh, indent=1)
