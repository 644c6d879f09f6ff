import math

import numpy as np
import pytest

from henonlab import dimension as dim
from henonlab.dimension import (BoxDimResult, IFSBranch, IFSSystem, PointCloud,
                                bowen_dimension, box_dimension,
                                hyperbolic_lower_bound, ifs_from_islands,
                                ifs_from_json, ifs_to_json, misiurewicz_shoot,
                                ShootingError)


def _equal_system(n, ratio):
    return IFSSystem([IFSBranch(1, [1.0 / ratio]) for _ in range(n)])


def test_moran_oracles():
    assert abs(bowen_dimension(_equal_system(3, 1 / 9)).dimension - 0.5) < 1e-10
    got = bowen_dimension(_equal_system(2, 1 / 3)).dimension
    assert abs(got - math.log(2) / math.log(3)) < 1e-6
    assert bowen_dimension(_equal_system(1, 0.37)).dimension == 0.0


def test_bowen_bracket():
    sys_spread = IFSSystem([IFSBranch(1, [3.0, 4.0, 5.0]),
                            IFSBranch(1, [2.5, 6.0])])
    res = bowen_dimension(sys_spread)
    assert res.lower <= res.dimension <= res.upper
    # bracket shrinks to the point estimate when samples agree
    res_eq = bowen_dimension(_equal_system(2, 1 / 3))
    assert res_eq.upper - res_eq.lower < 1e-10


def test_ifs_validation():
    with pytest.raises(ValueError):
        IFSBranch(1, [0.9, 2.0])   # not expanding
    with pytest.raises(ValueError):
        IFSBranch(0, [2.0])
    with pytest.raises(ValueError):
        IFSSystem([])
    # contraction ratios at or above 1 are rejected by the solver
    with pytest.raises(ValueError):
        dim._moran_root(np.array([0.5, 1.0]))


def test_hyperbolic_lower_bound():
    assert hyperbolic_lower_bound(_equal_system(2, 0.25)) == 0.5
    # equal contractions: the bound equals the Moran dimension
    s = _equal_system(4, 1 / 7)
    assert abs(hyperbolic_lower_bound(s)
               - bowen_dimension(s).dimension) < 1e-10
    # never exceeds the upper bracket (random systems)
    rng = np.random.default_rng(0)
    for _ in range(20):
        branches = [IFSBranch(1, 1.5 + 5 * rng.random(4)) for _ in range(3)]
        s = IFSSystem(branches)
        assert hyperbolic_lower_bound(s) <= bowen_dimension(s).upper + 1e-9


def test_box_dim_square():
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.random((1_000_000, 2)))
    res = box_dimension(cloud, 5)
    assert abs(res.dimension - 2.0) < 0.1
    assert res.stderr < 0.05
    assert len(res.counts) == len(res.scales) == 6 + 0  # k = 3..8


def test_box_dim_single_point():
    cloud = PointCloud(np.zeros((200, 2)))
    assert box_dimension(cloud, 4).dimension == 0.0


def _cantor_cloud(n=600_000, depth=30, seed=0):
    rng = np.random.default_rng(seed)
    pw = 3.0 ** -(np.arange(1, depth + 1))
    xs = (2 * rng.integers(0, 2, (n, depth))) @ pw
    ys = (2 * rng.integers(0, 2, (n, depth))) @ pw
    return np.stack([xs, ys], axis=1)


def test_box_dim_cantor_product():
    pts = _cantor_cloud()
    res = box_dimension(PointCloud(pts), 11)
    assert abs(res.dimension - math.log(4) / math.log(3)) < 0.05


def test_box_dim_rotation_invariance():
    pts = _cantor_cloud(300_000)
    th = np.pi / 6
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    d1 = box_dimension(PointCloud(pts), 9).dimension
    d2 = box_dimension(PointCloud(pts @ rot.T), 9).dimension
    assert abs(d1 - d2) < 0.02


def test_box_dim_validation():
    with pytest.raises(ValueError):
        box_dimension(PointCloud(np.zeros((50, 2))), 5)   # too few points
    with pytest.raises(ValueError):
        box_dimension(PointCloud(np.zeros((200, 2))), 3)  # too few scales
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 2)))


def test_cloud_csv_roundtrip(tmp_path):
    pts = np.random.default_rng(1).random((120, 2))
    cloud = PointCloud(pts)
    path = str(tmp_path / "cloud.csv")
    dim.cloud_to_csv(cloud, path)
    c2 = dim.cloud_from_csv(path)
    assert np.allclose(c2.points, pts)


def test_ifs_json_roundtrip():
    s = IFSSystem([IFSBranch(2, [3.0, 4.0]), IFSBranch(1, [5.0])])
    s2 = ifs_from_json(ifs_to_json(s))
    assert len(s2.branches) == 2
    assert s2.branches[0].return_time == 2
    assert np.allclose(s2.branches[0].derivative_samples, [3.0, 4.0])


def test_ifs_from_islands():
    from henonlab.horn import find_islands_for_map
    fsq = lambda zs: np.asarray(zs, complex) ** 2
    islands = find_islands_for_map(fsq, 1.0, 0.1, (0.5, 1.5, -0.5, 0.5))
    system = ifs_from_islands(fsq, islands)
    assert len(system.branches) == 1
    # |(z^2)'| = 2|z| ~ 2 on the island around 1
    samples = system.branches[0].derivative_samples
    assert abs(np.median(samples) - 2.0) < 0.2
    assert hyperbolic_lower_bound(system) == 0.0  # single branch: log 1 = 0


def test_shooting_oracle():
    fam = lambda c, z: z * z + c
    seed = (1 + np.sqrt(1 + 8.4)) / 2  # repelling fixed point at c = -2.1
    lam = misiurewicz_shoot(fam, -2.1, 0.0, 1, seed)
    assert abs(lam - (-2.0)) < 1e-8
    # already-solved input returns itself; rerunning is a fixed point
    lam2 = misiurewicz_shoot(fam, lam, 0.0, 1, 2.0)
    assert abs(lam2 - lam) < 1e-10
    # tighter internal tolerance reproduces the parameter
    lam3 = misiurewicz_shoot(fam, -2.1, 0.0, 1, seed, tol=1e-12)
    assert abs(lam3 - (-2.0)) < 1e-8


def test_shooting_divergence():
    fam = lambda c, z: z * z + c
    with pytest.raises(ShootingError) as err:
        # no trackable repelling point from an absurd seed
        misiurewicz_shoot(fam, 0.25, 0.0, 1, 1e6)
    assert err.value.trace or err.value.residual is not None
