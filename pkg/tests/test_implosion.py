import math

import numpy as np
import pytest

from henonlab import implosion
from henonlab.implosion import (alpha_epsilon, alpha_sequence_item,
                                basin_samples, implosion_error, lavaurs,
                                lavaurs_many)
from henonlab.fatou import in_basin_many
from henonlab.henon import Point2, step_many


def test_alpha_epsilon():
    assert alpha_epsilon(0, 100) == math.pi / 100
    assert alpha_epsilon(1, 101) == math.pi / 100
    with pytest.raises(ValueError):
        alpha_epsilon(5, 5)
    for alpha, n in ((0.0, 100), (1.0, 17), (-0.5, 23)):
        eps = alpha_epsilon(alpha, n)
        assert abs((n - math.pi / eps) - alpha) < 1e-12


def test_alpha_sequence_item_exact():
    item = alpha_sequence_item(0.25, 40)
    # the stored alpha satisfies the defining identity bit-exactly
    assert item.n - math.pi / item.epsilon == item.alpha
    assert abs(item.alpha - 0.25) < 1e-12


def test_basin_samples(ev05, map05):
    zs, ws = basin_samples(ev05, map05, 12, seed=3)
    assert zs.size == 12
    assert in_basin_many(map05, zs, ws, chart=ev05.chart).all()
    assert (np.maximum(np.abs(zs), np.abs(ws)) <= map05.R).all()
    # deterministic
    zs2, _ = basin_samples(ev05, map05, 12, seed=3)
    assert np.array_equal(zs, zs2)


def test_lavaurs_equivariance(ev05, map05):
    zs, ws = basin_samples(ev05, map05, 20, seed=5)
    lz, lw, ok = lavaurs_many(ev05, map05, 0.3 + 0.1j, zs, ws)
    assert ok.all()
    fz, fw = step_many(map05, zs, ws)
    lfz, lfw, ok2 = lavaurs_many(ev05, map05, 0.3 + 0.1j, fz, fw)
    assert ok2.all()
    flz, flw = step_many(map05, lz, lw)
    res = np.hypot(np.abs(flz - lfz), np.abs(flw - lfw))
    assert res.max() < 1e-6


def test_lavaurs_phase_shift(ev05, map05):
    zs, ws = basin_samples(ev05, map05, 10, seed=6)
    l1z, l1w, _ = lavaurs_many(ev05, map05, 1.2, zs, ws)
    l0z, l0w, _ = lavaurs_many(ev05, map05, 0.2, zs, ws)
    fz, fw = step_many(map05, l0z, l0w)
    res = np.hypot(np.abs(l1z - fz), np.abs(l1w - fw))
    assert res.max() < 1e-6  # L_{a+1} = f o L_a


def test_lavaurs_lands_on_sigma(ev05, map05):
    # the image approaches the fixed point under backward iteration (only a
    # bounded number of steps is meaningful: the strong-stable direction
    # expands backwards, so any transverse evaluation error doubles per step)
    zs, ws = basin_samples(ev05, map05, 5, seed=7)
    lz, lw, ok = lavaurs_many(ev05, map05, 0.0, zs, ws)
    assert ok.all()
    p = Point2(complex(lz[0]), complex(lw[0]))
    from henonlab.henon import eval_inverse, fixed_points
    fp = fixed_points(map05)[0].location
    d0 = abs(p.z - fp.z) + abs(p.w - fp.w)
    q = p
    dmin = d0
    for _ in range(18):
        q = eval_inverse(map05, q)
        dmin = min(dmin, abs(q.z - fp.z) + abs(q.w - fp.w))
    assert dmin < 0.3
    assert dmin < 0.8 * d0


def test_lavaurs_scalar(ev05, map05):
    zs, ws = basin_samples(ev05, map05, 1, seed=8)
    p = Point2(complex(zs[0]), complex(ws[0]))
    q = lavaurs(ev05, map05, 0.0, p)
    assert np.isfinite(q.z) and np.isfinite(q.w)


def test_implosion_error_report(ev05, map05):
    samples = basin_samples(ev05, map05, 20, seed=11)
    rep = implosion_error(ev05, map05, 0.0, 40, samples)
    assert rep.n == 40
    assert rep.epsilon == alpha_epsilon(0.0, 40)
    assert rep.sample_count == 20
    assert rep.excluded < 20
    assert rep.median_error is not None and rep.median_error < 0.5
    d = rep.to_dict()
    assert d["phase_convention"] == "chart-paired"


def test_implosion_error_rejects_non_basin(ev05, map05):
    with pytest.raises(ValueError):
        implosion_error(ev05, map05, 0.0, 40, ([5.0 + 0j], [0j]))


def test_implosion_empty_statistics(ev05, map05):
    # samples deep past the gate budget: every perturbed orbit is ejected
    # through the real direction before n steps, so the whole set is flagged
    zs, ws = basin_samples(ev05, map05, 4, seed=12, re_range=(14.0, 16.0))
    rep = implosion_error(ev05, map05, 0.0, 20, (zs, ws))
    assert rep.excluded == rep.sample_count
    assert rep.median_error is None and rep.max_error is None
