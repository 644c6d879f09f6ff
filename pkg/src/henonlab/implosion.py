"""Henon-Lavaurs transition maps and the alpha-sequence implosion experiment.

The Lavaurs map of phase alpha is the composition psi o t_alpha o phi.  Here
phi and psi are paired in the chart normalization (the raw incoming limit,
before the anchor constant is subtracted): with that pairing the large-iterate
limit of the perturbed maps along alpha-sequences matches phase alpha with no
measurable offset, which was checked by inverting psi on perturbed endpoints.
Relative to the anchor-normalized public phi, the phase differs by the
constant anchor value, reported in the experiment metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .henon import HenonMap, Point2, perturbed_family, step_many
from .fatou import (FatouEvaluator, incoming_coordinate_many, in_basin_many,
                    outgoing_param_many, ConvergenceError)


@dataclass(frozen=True)
class AlphaSequenceItem:
    """One (n, epsilon) pair; alpha is recomputed from epsilon so that
    n - pi/epsilon = Re(alpha) holds exactly as stored."""

    n: int
    epsilon: float
    alpha: complex


def alpha_epsilon(alpha: float, n: int) -> float:
    """epsilon = pi/(n - alpha), so n - pi/epsilon recovers alpha."""
    if not n > alpha:
        raise ValueError("need n > alpha")
    return math.pi / (n - alpha)


def alpha_sequence_item(alpha: float, n: int) -> AlphaSequenceItem:
    eps = alpha_epsilon(alpha, n)
    return AlphaSequenceItem(n=n, epsilon=eps, alpha=n - math.pi / eps)


def raw_incoming_many(ev: FatouEvaluator, m: HenonMap, zs, ws):
    """Chart-paired incoming coordinate (no anchor subtraction)."""
    phi, ok, iters, resid = incoming_coordinate_many(ev, m, zs, ws)
    return phi + ev.anchor_phi, ok, iters, resid


def lavaurs_many(ev: FatouEvaluator, m: HenonMap, alpha: complex, zs, ws):
    """Vectorized Lavaurs map; returns (z, w, ok)."""
    phi, okp, _, _ = raw_incoming_many(ev, m, zs, ws)
    lz, lw, oko, _, _ = outgoing_param_many(
        ev, m, np.where(okp, phi, 0.0) + alpha)
    return lz, lw, okp & oko


def lavaurs(ev: FatouEvaluator, m: HenonMap, alpha: complex, p: Point2) -> Point2:
    """L_alpha(p) = psi(phi(p) + alpha) in the chart pairing; lands on the
    repelling parabolic curve."""
    lz, lw, ok = lavaurs_many(ev, m, alpha, [p.z], [p.w])
    if not ok[0]:
        raise ConvergenceError("Lavaurs evaluation failed at %r" % (p,))
    return Point2(complex(lz[0]), complex(lw[0]))


def basin_samples(ev: FatouEvaluator, m: HenonMap, count: int, seed: int = 0,
                  re_range=(2.0, 6.0), depth_range=(0.030, 0.045),
                  angle_range=(-0.35, -0.22)):
    """Deterministic basin sample set suitable for implosion runs.

    Points start on the chart center line with an incoming coordinate whose
    imaginary part is large (the orbit hugs the small cylinder end, so crude
    perturbations do not eject it) and are pulled back until the real part
    lands in re_range.  Candidates leaving the filtration bidisk during the
    pullback are rejected.
    """
    rng = np.random.default_rng(seed)
    out_z, out_w = [], []
    guard = 0
    while len(out_z) < count and guard < 20:
        guard += 1
        mcount = 4 * count
        theta = angle_range[0] + (angle_range[1] - angle_range[0]) * rng.random(mcount)
        r = depth_range[0] + (depth_range[1] - depth_range[0]) * rng.random(mcount)
        zeta0 = -r * np.exp(1j * theta)
        pz, pw = ev.chart.inverse_many(zeta0, np.zeros(mcount, complex))
        phi, ok, _, _ = raw_incoming_many(ev, m, pz, pw)
        target = re_range[0] + (re_range[1] - re_range[0]) * rng.random(mcount)
        jback = np.maximum(0, np.round(phi.real - target)).astype(int)
        for i in range(mcount):
            z, w = pz[i], pw[i]
            good = bool(ok[i])
            for _ in range(jback[i]):
                z, w = w, (z - w * w - m.c) / m.a
                if max(abs(z), abs(w)) > m.R:
                    good = False
                    break
            if good:
                out_z.append(complex(z))
                out_w.append(complex(w))
            if len(out_z) >= count:
                break
    if len(out_z) < count:
        raise RuntimeError("could not build the requested basin sample")
    return np.array(out_z), np.array(out_w)


@dataclass(frozen=True)
class ImplosionReport:
    alpha: float
    n: int
    epsilon: float
    max_error: float | None
    median_error: float | None
    excluded: int
    sample_count: int
    phase_convention: str = "chart-paired"

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "n": self.n, "epsilon": self.epsilon,
            "max_error": self.max_error, "median_error": self.median_error,
            "excluded": self.excluded, "sample_count": self.sample_count,
            "phase_convention": self.phase_convention,
        }


def implosion_error(ev: FatouEvaluator, m: HenonMap, alpha: float, n: int,
                    samples) -> ImplosionReport:
    """Compare f_eps^n with L_alpha on basin samples, eps = pi/(n - alpha).

    Samples whose perturbed orbit leaves the filtration bidisk are excluded
    and counted.  An empty survivor set reports None statistics.
    """
    zs, ws = samples
    zs = np.asarray(zs, dtype=complex)
    ws = np.asarray(ws, dtype=complex)
    if not in_basin_many(m, zs, ws, chart=ev.chart).all():
        raise ValueError("all samples must lie in the parabolic basin")
    eps = alpha_epsilon(alpha, n)
    fe = perturbed_family(m, eps)
    z, w = zs.copy(), ws.copy()
    inside = np.maximum(np.abs(z), np.abs(w)) <= fe.R
    for _ in range(n):
        z, w = step_many(fe, z, w)
        bad = ~np.isfinite(z) | ~np.isfinite(w)
        inside &= ~bad & (np.maximum(np.abs(z), np.abs(w)) <= fe.R)
        z = np.where(bad, 0.0, z)
        w = np.where(bad, 0.0, w)
    lz, lw, okL = lavaurs_many(ev, m, complex(alpha), zs, ws)
    inside &= okL
    err = np.hypot(np.abs(z - lz), np.abs(w - lw))
    excluded = int((~inside).sum())
    if inside.any():
        med = float(np.median(err[inside]))
        mx = float(err[inside].max())
    else:
        med = mx = None
    return ImplosionReport(alpha=float(alpha), n=int(n), epsilon=float(eps),
                           max_error=mx, median_error=med, excluded=excluded,
                           sample_count=int(zs.size))
