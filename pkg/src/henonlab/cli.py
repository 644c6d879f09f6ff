"""Command-line front end.

Subcommands: render, horn, islands, cycles, implosion, bowen, boxdim, shoot.
Options come from flags or a JSON config file (flags win); unknown config
keys are rejected.  Every JSON report embeds the merged config, the tool
version, and the wall-clock time; the numerical payload depends only on the
config, so reruns reproduce it bit-exactly.

Exit codes: 0 success, 2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .henon import (HenonMap, Point2, semi_parabolic_map, fixed_points,
                    map_to_dict, c2pair)
from .green import Slice, julia_slice, write_csv, write_png, julia_boundary_points
from .fatou import make_evaluator, ConvergenceError
from .horn import (lifted_horn_many, horn_callable, find_islands,
                   find_islands_for_map, injectivity_audit, repelling_cycles,
                   repelling_cycles_for_map, islands_to_csv, HornDomainError)
from .implosion import implosion_error, basin_samples
from .dimension import (IFSSystem, IFSBranch, bowen_dimension,
                        hyperbolic_lower_bound, ifs_from_islands, ifs_from_json,
                        PointCloud, box_dimension, cloud_from_csv,
                        misiurewicz_shoot, ShootingError)


class ConfigError(ValueError):
    pass


def _parse_complex(text) -> complex:
    if isinstance(text, (list, tuple)):
        return complex(float(text[0]), float(text[1]))
    if isinstance(text, (int, float, complex)):
        return complex(text)
    parts = str(text).split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ConfigError("complex values are 're' or 're,im', got %r" % text)


def _parse_window(text):
    vals = text if isinstance(text, (list, tuple)) else str(text).split(",")
    if len(vals) != 4:
        raise ConfigError("window must be x0,x1,y0,y1")
    x0, x1, y0, y1 = (float(v) for v in vals)
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("window sides must be positive")
    return (x0, x1, y0, y1)


def _parse_resolution(text):
    vals = text if isinstance(text, (list, tuple)) else str(text).split(",")
    if len(vals) == 1:
        return (int(vals[0]), int(vals[0]))
    if len(vals) == 2:
        return (int(vals[0]), int(vals[1]))
    raise ConfigError("resolution must be 'n' or 'nx,ny'")


def _parse_int_list(text):
    vals = text if isinstance(text, (list, tuple)) else str(text).split(",")
    return [int(v) for v in vals]


def _build_map(cfg) -> HenonMap:
    a = _parse_complex(cfg["map_a"]) if cfg.get("map_a") is not None else 0.5 + 0j
    if cfg.get("map_c") is not None:
        return HenonMap(_parse_complex(cfg["map_c"]), a)
    return semi_parabolic_map(a)


def _check_out(cfg):
    out = cfg.get("out")
    if not out:
        raise ConfigError("--out is required")
    parent = os.path.dirname(os.path.abspath(out))
    if not os.path.isdir(parent):
        raise ConfigError("output directory does not exist: %s" % parent)
    return out


def _write_report(cfg, payload, path, elapsed):
    clean = {k: v for k, v in sorted(cfg.items()) if not k.startswith("_")}
    report = {
        "tool": "henonlab",
        "version": __version__,
        "command": cfg.get("command"),
        "config": clean,
        "wall_time_s": elapsed,
        "payload": payload,
    }
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1)


# --- subcommand implementations ---

def _cmd_render(cfg):
    m = _build_map(cfg)
    out = _check_out(cfg)
    window = _parse_window(cfg.get("window") or "-2,2,-2,2")
    resolution = _parse_resolution(cfg.get("resolution") or "128,128")
    sign = cfg.get("sign") or "+"
    mode = cfg.get("mode") or "green"
    if sign not in "+-":
        raise ConfigError("sign must be + or -")
    if cfg.get("slice") is not None:
        sf = [float(v) for v in (cfg["slice"] if isinstance(cfg["slice"], list)
                                 else str(cfg["slice"]).split(","))]
        if len(sf) != 8:
            raise ConfigError("slice needs 8 numbers: base z,w and direction z,w")
        slice_ = Slice(Point2(complex(sf[0], sf[1]), complex(sf[2], sf[3])),
                       (complex(sf[4], sf[5]), complex(sf[6], sf[7])))
    else:
        fp = fixed_points(m)[0].location
        slice_ = Slice(fp, (1.0 + 0j, 0j))
    grid = julia_slice(m, slice_, window, resolution, sign=sign, mode=mode,
                       max_iter=cfg.get("max_iter"),
                       workers=int(cfg.get("workers") or 1))
    fmt = cfg.get("format") or "csv"
    if fmt == "csv":
        write_csv(grid, out)
    elif fmt == "png":
        write_png(grid, out)
    else:
        raise ConfigError("format must be csv or png")
    payload = {"out": out, "format": fmt, "nx": resolution[0], "ny": resolution[1]}
    return payload, out + ".report.json"


def _cmd_horn(cfg):
    m = _build_map(cfg)
    out = _check_out(cfg)
    window = _parse_window(cfg.get("window") or "0,1,2,4")
    nx, ny = _parse_resolution(cfg.get("resolution") or "16,12")
    ev = make_evaluator(m, tolerance=float(cfg.get("tolerance") or 1e-8))
    xs = np.linspace(window[0], window[1], nx)
    ys = np.linspace(window[2], window[3], ny)
    X, Y = np.meshgrid(xs, ys)
    zs = (X + 1j * Y).ravel()
    vals = lifted_horn_many(ev, m, zs)
    mask = np.isfinite(vals)
    payload = {
        "window": list(window), "resolution": [nx, ny],
        "values": [c2pair(v) if np.isfinite(v) else None for v in vals],
        "mask": [bool(b) for b in mask],
    }
    if cfg.get("audit"):
        sample = zs[mask][: min(64, int(mask.sum()))]
        v1 = lifted_horn_many(ev, m, sample)
        v2 = lifted_horn_many(ev, m, sample + 1.0)
        both = np.isfinite(v1) & np.isfinite(v2)
        res = np.abs(v2[both] - v1[both] - 1.0)
        payload["commutation_max_residual"] = float(res.max()) if both.any() else None
    return payload, out


def _cmd_islands(cfg):
    m = _build_map(cfg)
    out = _check_out(cfg)
    window = _parse_window(cfg.get("window") or "0,1,2,3")
    z0 = _parse_complex(cfg.get("z0") if cfg.get("z0") is not None else "0,0")
    r = float(cfg.get("r") or 0.1)
    resolution = int(cfg["resolution"]) if cfg.get("resolution") else None
    model = cfg.get("model") or "henon"
    if model == "henon":
        ev = make_evaluator(m, tolerance=float(cfg.get("tolerance") or 1e-8))
        islands = find_islands(ev, m, z0, r, window, resolution)
        fn = horn_callable(ev, m)
    elif model == "square":
        fn = lambda zs: np.asarray(zs, complex) ** 2
        islands = find_islands_for_map(fn, z0, r, window, resolution)
    else:
        raise ConfigError("model must be henon or square")
    payload = {"islands": [isl.to_dict() for isl in islands]}
    if cfg.get("audit"):
        payload["injectivity"] = [
            bool(injectivity_audit(fn, isl, seed=int(cfg.get("seed") or 0)))
            for isl in islands]
    if islands:
        system = ifs_from_islands(fn, islands, seed=int(cfg.get("seed") or 0))
        try:
            payload["hyperbolic_lower_bound"] = hyperbolic_lower_bound(system)
            payload["bowen"] = bowen_dimension(system).to_dict()
        except ValueError:
            payload["hyperbolic_lower_bound"] = None
    if cfg.get("boundaries_csv"):
        islands_to_csv(islands, cfg["boundaries_csv"])
    return payload, out


def _cmd_cycles(cfg):
    m = _build_map(cfg)
    out = _check_out(cfg)
    window = _parse_window(cfg.get("window") or "0,1,0.2,5")
    period = int(cfg.get("period") or 1)
    seeds = int(cfg.get("seeds") or 100)
    model = cfg.get("model") or "henon"
    if model == "henon":
        ev = make_evaluator(m, tolerance=float(cfg.get("tolerance") or 1e-8))
        pts = repelling_cycles(ev, m, period, window, seeds)
    elif model == "doubling":
        fn = lambda zs: 2.0 * np.asarray(zs, complex)
        pts = repelling_cycles_for_map(fn, period, window, seeds)
    else:
        raise ConfigError("model must be henon or doubling")
    payload = {"cycles": [p.to_dict() for p in pts]}
    return payload, out


def _cmd_implosion(cfg):
    m = _build_map(cfg)
    out = _check_out(cfg)
    alpha = float(cfg.get("alpha") or 0.0)
    ns = _parse_int_list(cfg.get("n") or "20,40,80")
    count = int(cfg.get("samples") or 20)
    ev = make_evaluator(m, tolerance=float(cfg.get("tolerance") or 1e-8))
    zs, ws = basin_samples(ev, m, count, seed=int(cfg.get("seed") or 0))
    reports = [implosion_error(ev, m, alpha, n, (zs, ws)).to_dict() for n in ns]
    payload = {"reports": reports}
    return payload, out


def _cmd_bowen(cfg):
    out = _check_out(cfg)
    if cfg.get("ifs"):
        with open(cfg["ifs"]) as fh:
            system = ifs_from_json(fh.read())
    elif cfg.get("branches"):
        n = int(cfg["branches"])
        ratio = float(cfg.get("contraction") or 0.5)
        if not 0 < ratio < 1:
            raise ConfigError("contraction must be in (0,1)")
        system = IFSSystem([IFSBranch(1, [1.0 / ratio]) for _ in range(n)])
    else:
        raise ConfigError("need --ifs FILE or --branches N [--contraction r]")
    res = bowen_dimension(system)
    payload = res.to_dict()
    payload["hyperbolic_lower_bound"] = hyperbolic_lower_bound(system)
    return payload, out


def _julia_cloud(m, window, resolution, max_iter):
    fp = fixed_points(m)[0].location
    slice_ = Slice(fp, (1.0 + 0j, 0j))
    grid = julia_slice(m, slice_, window, resolution, sign="+", max_iter=max_iter)
    pts = julia_boundary_points(grid)
    if pts.shape[0] < 100:
        raise ConvergenceError("julia slice produced too few boundary points")
    return PointCloud(pts)


def _cmd_boxdim(cfg):
    out = _check_out(cfg)
    scales = int(cfg.get("scales") or 6)
    if cfg.get("points"):
        cloud = cloud_from_csv(cfg["points"])
        res = box_dimension(cloud, scales, seed=int(cfg.get("seed") or 0))
        payload = res.to_dict()
    elif cfg.get("julia"):
        from .henon import perturbed_family
        m = _build_map(cfg)
        window = _parse_window(cfg.get("window") or "-2,2,-2,2")
        resolution = _parse_resolution(cfg.get("resolution") or "256,256")
        max_iter = int(cfg.get("max_iter") or 400)
        eps = float(cfg.get("epsilon") or math.pi / 80.0)
        base = box_dimension(_julia_cloud(m, window, resolution, max_iter),
                             scales, seed=int(cfg.get("seed") or 0))
        pert_map = perturbed_family(m, eps)
        pert = box_dimension(_julia_cloud(pert_map, window, resolution, max_iter),
                             scales, seed=int(cfg.get("seed") or 0))
        payload = {
            "baseline": base.to_dict(),
            "perturbed": dict(pert.to_dict(), epsilon=eps),
        }
    else:
        raise ConfigError("need --points FILE.csv or --julia")
    return payload, out


def _cmd_shoot(cfg):
    out = _check_out(cfg)
    family_name = cfg.get("family") or "quadratic"
    lam0 = _parse_complex(cfg.get("lambda0") if cfg.get("lambda0") is not None else "-2.1")
    crit = _parse_complex(cfg.get("critical") if cfg.get("critical") is not None else "0")
    n = int(cfg.get("n") or 1)
    period = int(cfg.get("period") or 1)
    if family_name == "quadratic":
        family = lambda lam, z: z * z + lam
        if cfg.get("cycle_seed") is not None:
            seed = _parse_complex(cfg["cycle_seed"])
        else:
            seed = (1.0 + np.sqrt(1.0 - 4.0 * lam0)) / 2.0
    elif family_name == "horn":
        m = _build_map(cfg)
        ev = make_evaluator(m, tolerance=float(cfg.get("tolerance") or 1e-8))
        fn = horn_callable(ev, m)

        def family(lam, zeta):
            # cylinder family lambda * h: evaluate through the lift
            if zeta == 0:
                return 0.0
            lift = np.log(complex(zeta)) / (2j * np.pi)
            val = fn(np.array([complex(lift.real - np.floor(lift.real), lift.imag)]))[0]
            if not np.isfinite(val):
                return np.nan
            return lam * np.exp(2j * np.pi * val)

        if cfg.get("cycle_seed") is None:
            raise ConfigError("--cycle-seed is required for the horn family")
        seed = _parse_complex(cfg["cycle_seed"])
    else:
        raise ConfigError("family must be quadratic or horn")
    lam = misiurewicz_shoot(family, lam0, crit, n, seed, period=period)
    payload = {"lambda": c2pair(lam), "start": c2pair(lam0), "n": n,
               "period": period, "family": family_name}
    return payload, out


_COMMANDS = {
    "render": _cmd_render,
    "horn": _cmd_horn,
    "islands": _cmd_islands,
    "cycles": _cmd_cycles,
    "implosion": _cmd_implosion,
    "bowen": _cmd_bowen,
    "boxdim": _cmd_boxdim,
    "shoot": _cmd_shoot,
}

_COMMON = ("map_a", "map_c", "window", "resolution", "out", "workers",
           "seed", "config", "tolerance")


def _build_parser():
    ap = argparse.ArgumentParser(prog="henonlab",
                                 description="semi-parabolic Henon dynamics lab")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--map-a", dest="map_a")
        p.add_argument("--map-c", dest="map_c")
        p.add_argument("--window")
        p.add_argument("--resolution")
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--config")
        p.add_argument("--tolerance", type=float)

    p = sub.add_parser("render", help="G+/G- or escape-time field over a slice")
    common(p)
    p.add_argument("--sign", choices=["+", "-"])
    p.add_argument("--mode", choices=["green", "classify"])
    p.add_argument("--format", choices=["csv", "png"])
    p.add_argument("--slice")
    p.add_argument("--max-iter", dest="max_iter", type=int)

    p = sub.add_parser("horn", help="lifted horn map on a lift grid")
    common(p)
    p.add_argument("--audit", action="store_true")

    p = sub.add_parser("islands", help="univalent island search")
    common(p)
    p.add_argument("--z0")
    p.add_argument("--r", type=float)
    p.add_argument("--model", choices=["henon", "square"])
    p.add_argument("--audit", action="store_true")
    p.add_argument("--boundaries-csv", dest="boundaries_csv")

    p = sub.add_parser("cycles", help="repelling periodic points of the horn map")
    common(p)
    p.add_argument("--period", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--model", choices=["henon", "doubling"])

    p = sub.add_parser("implosion", help="alpha-sequence convergence report")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("bowen", help="Moran/Bowen dimension of an IFS")
    common(p)
    p.add_argument("--ifs")
    p.add_argument("--branches", type=int)
    p.add_argument("--contraction", type=float)

    p = sub.add_parser("boxdim", help="box-counting dimension")
    common(p)
    p.add_argument("--points")
    p.add_argument("--scales", type=int)
    p.add_argument("--julia", action="store_true")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)

    p = sub.add_parser("shoot", help="Misiurewicz shooting solver")
    common(p)
    p.add_argument("--family", choices=["quadratic", "horn"])
    p.add_argument("--lambda0")
    p.add_argument("--critical")
    p.add_argument("--n")
    p.add_argument("--period", type=int)
    p.add_argument("--cycle-seed", dest="cycle_seed")

    return ap


def _merge_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items()}
    path = cfg.get("config")
    if path:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("cannot read config file: %s" % e)
        known = set(cfg.keys())
        unknown = set(file_cfg.keys()) - known
        if unknown:
            raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        for k, v in file_cfg.items():
            if cfg.get(k) is None or cfg.get(k) is False:
                cfg[k] = v
    return cfg


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _merge_config(args)
        t0 = time.time()
        payload, report_path = _COMMANDS[args.command](cfg)
        _write_report(cfg, payload, report_path, time.time() - t0)
    except (ConfigError, OSError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    except (ConvergenceError, HornDomainError, ShootingError) as e:
        print("numerical failure: %s" % e, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
