import os

import numpy as np
import pytest

from henonlab import green, henon
from henonlab.green import (OrbitStatus, Slice, classify, green_many,
                            julia_slice, julia_boundary_points,
                            write_csv, read_csv, write_png)
from henonlab.henon import Point2, fixed_points


def test_green_on_filtration_region(map05):
    # on V+_R the Green function is log|z| + o(1)
    val = green.green(map05, Point2(1e6, 0))
    assert abs(val - np.log(1e6)) < 1e-3


def test_green_zero_on_bounded(map05, ev05, basin_points):
    fp = fixed_points(map05)[0].location
    assert green.green(map05, fp) == 0.0
    pz, pw = basin_points
    vals, _, trunc = green_many(map05, pz, pw)
    assert (vals == 0).all()
    assert trunc.all()  # never escaped


def test_functional_equation(map05):
    rng = np.random.default_rng(0)
    z = 10 * (rng.random(1000) - 0.5) + 10j * (rng.random(1000) - 0.5)
    w = 10 * (rng.random(1000) - 0.5) + 10j * (rng.random(1000) - 0.5)
    gp, _, _ = green_many(map05, z, w, "+")
    fz, fw = henon.step_many(map05, z, w)
    gpf, _, _ = green_many(map05, fz, fw, "+")
    assert np.abs(gpf - 2 * gp).max() < 1e-8
    assert (gp >= 0).all()
    gm, _, _ = green_many(map05, z, w, "-")
    bz, bw = henon.istep_many(map05, z, w)
    gmf, _, _ = green_many(map05, bz, bw, "-")
    assert np.abs(gmf - 2 * gm).max() < 1e-8


def test_classify(map05):
    fp = fixed_points(map05)[0].location
    f, b = classify(map05, fp)
    assert f.status is OrbitStatus.BOUNDED_FORWARD
    assert b.status is OrbitStatus.BOUNDED_BACKWARD
    assert f.truncated and b.truncated

    vplus = Point2(5.0, 0.1)
    f, b = classify(map05, vplus)
    assert f.status is OrbitStatus.ESCAPES_FORWARD and f.exit_iterate == 0

    vminus = Point2(0.1, 5.0)
    f, b = classify(map05, vminus)
    assert b.status is OrbitStatus.ESCAPES_BACKWARD and b.exit_iterate == 0


def test_classify_stable_under_budget(map05):
    rng = np.random.default_rng(5)
    z = 4 * (rng.random(200) - 0.5) + 4j * (rng.random(200) - 0.5)
    w = 4 * (rng.random(200) - 0.5) + 4j * (rng.random(200) - 0.5)
    f1, _ = green.classify_many(map05, z, w, max_iter=50)
    f2, _ = green.classify_many(map05, z, w, max_iter=500)
    esc = f1 >= 0
    assert (f2[esc] == f1[esc]).all()  # escapers never revert


def _fp_slice(m):
    return Slice(fixed_points(m)[0].location, (1.0 + 0j, 0j))


def test_julia_slice_shapes(map05):
    grid = julia_slice(map05, _fp_slice(map05), (-1, 1, -1, 1), (16, 16))
    assert grid.values.size == 256
    # window fully inside V+_R: all values positive
    g2 = julia_slice(map05, Slice(Point2(50, 0), (1 + 0j, 0j)),
                     (-1, 1, -1, 1), (8, 8))
    assert (g2.values > 0).all()
    # slice through the fixed point contains a zero
    g3 = julia_slice(map05, _fp_slice(map05), (-1, 1, -1, 1), (17, 17))
    assert g3.values2d()[8, 8] == 0.0


def test_julia_boundary_points(map05):
    grid = julia_slice(map05, _fp_slice(map05), (-2, 2, -2, 2), (96, 96))
    pts = julia_boundary_points(grid)
    assert pts.shape[0] > 100
    # boundary points carry small positive Green values
    dz, dw = grid.slice_.direction
    ts = pts[:, 0] + 1j * pts[:, 1]
    vals, _, _ = green_many(map05, grid.slice_.base.z + ts * dz,
                            grid.slice_.base.w + ts * dw)
    assert np.median(vals[vals > 0]) < 0.05


def test_worker_determinism(map05, tmp_path):
    args = (map05, _fp_slice(map05), (-1.5, 1.5, -1.5, 1.5), (48, 48))
    g1 = julia_slice(*args, workers=1)
    g2 = julia_slice(*args, workers=3)
    assert np.array_equal(g1.values, g2.values)
    p1 = os.path.join(tmp_path, "a.csv")
    p2 = os.path.join(tmp_path, "b.csv")
    write_csv(g1, p1)
    write_csv(g2, p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_csv_roundtrip(map05, tmp_path):
    grid = julia_slice(map05, _fp_slice(map05), (-1, 1, -1, 1), (16, 12))
    path = os.path.join(tmp_path, "grid.csv")
    write_csv(grid, path)
    g2 = read_csv(path)
    assert g2.resolution == grid.resolution
    assert g2.window == grid.window
    assert np.array_equal(g2.values, grid.values)
    assert g2.slice_.base == grid.slice_.base


def test_png_sidecar(map05, tmp_path):
    grid = julia_slice(map05, _fp_slice(map05), (-1, 1, -1, 1), (16, 16))
    path = os.path.join(tmp_path, "grid.png")
    sidecar = write_png(grid, path)
    assert os.path.exists(path) and os.path.exists(sidecar)
    import json
    meta = json.load(open(sidecar))
    assert meta["nx"] == 16 and "vmin" in meta and "vmax" in meta
    from PIL import Image
    img = np.array(Image.open(path))
    assert img.shape == (16, 16)
    span = meta["vmax"] - meta["vmin"] or 1.0
    recon = meta["vmin"] + img.astype(float) / 65535.0 * span
    assert np.abs(recon - grid.values2d()).max() < span / 65535.0 + 1e-12


def test_grid_validation(map05):
    with pytest.raises(ValueError):
        julia_slice(map05, _fp_slice(map05), (-1, 1, -1, 1), (1, 5))
    with pytest.raises(ValueError):
        julia_slice(map05, _fp_slice(map05), (1, -1, -1, 1), (8, 8))
