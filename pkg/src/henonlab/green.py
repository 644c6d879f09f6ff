"""Green functions G+/G- and orbit classification for Henon maps.

Escape is detected by entry into the filtration region V+_R (resp. V-_R),
which is rigorous: once |z| > max(|w|, R) the forward orbit stays there and
goes to infinity.  The Green value is then the limit of 2^-n log|z_n|,
accumulated incrementally so the functional equation G o f = 2 G holds to
rounding even for freshly-escaped points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .henon import HenonMap, Point2, step_many, istep_many

DEFAULT_CLASSIFY_ITER = 2000
DEFAULT_GREEN_ITER = 200
JULIA_LEVEL = 1e-3          # sublevel threshold used for J-slice extraction
_REFINE_MAX = 60
_COORD_HUGE = 1e100


class OrbitStatus(Enum):
    BOUNDED_FORWARD = "bounded_forward"
    ESCAPES_FORWARD = "escapes_forward"
    BOUNDED_BACKWARD = "bounded_backward"
    ESCAPES_BACKWARD = "escapes_backward"


@dataclass(frozen=True)
class OrbitClassification:
    status: OrbitStatus
    exit_iterate: int | None
    truncated: bool = False


def _green_kernel(m: HenonMap, z0, w0, sign: str, max_iter: int):
    """Vectorized Green values.

    Returns (values, exit_iterates, truncated).  exit_iterate is -1 where the
    orbit never entered the escape region within max_iter (value 0 there).
    """
    z = np.array(z0, dtype=complex).ravel()
    w = np.array(w0, dtype=complex).ravel()
    n_pts = z.size
    forward = sign == "+"
    step = step_many if forward else istep_many

    exit_it = np.full(n_pts, -1, dtype=np.int64)
    gsum = np.zeros(n_pts)          # log|coord| + correction series, at entry scale
    scale = np.zeros(n_pts)         # 2^-n at the entry iterate
    refinements = np.zeros(n_pts, dtype=np.int64)
    frozen = np.zeros(n_pts, dtype=bool)

    loga = math.log(abs(m.a))
    for k in range(max_iter + 1):
        coord = z if forward else w
        other = w if forward else z
        ac = np.abs(coord)
        entering = (exit_it < 0) & (ac > np.maximum(np.abs(other), m.R))
        if entering.any():
            exit_it[entering] = k
            gsum[entering] = np.log(ac[entering])
            scale[entering] = 0.5 ** k
        live = (exit_it >= 0) & ~frozen
        zn, wn = step(m, z, w)
        if live.any() or (exit_it < 0).any():
            coord_new = zn if forward else wn
            acn = np.abs(coord_new)
            upd = live & np.isfinite(acn) & (acn > 0)
            if upd.any():
                j = refinements[upd] + 1
                corr = np.log(acn[upd]) - 2.0 * np.log(np.abs(coord[upd]))
                gsum[upd] += corr * (0.5 ** j)
                refinements[upd] = j
            # freeze when the coordinate is huge or the budget is spent;
            # the remaining backward corrections sum to -log|a| * 2^-j
            done = live & ((acn > _COORD_HUGE) | ~np.isfinite(acn)
                           | (refinements >= _REFINE_MAX))
            if done.any():
                if not forward:
                    gsum[done] += -loga * (0.5 ** refinements[done])
                frozen[done] = True
        active = ~frozen & np.isfinite(zn) & np.isfinite(wn)
        z = np.where(active, zn, z)
        w = np.where(active, wn, w)
    values = np.where(exit_it >= 0, np.maximum(gsum, 0.0) * scale, 0.0)
    truncated = exit_it < 0
    return values, exit_it, truncated


def green_many(m: HenonMap, z0, w0, sign: str = "+",
               max_iter: int = DEFAULT_GREEN_ITER):
    """Green function values over coordinate arrays; see _green_kernel."""
    return _green_kernel(m, z0, w0, sign, max_iter)


def green(m: HenonMap, p: Point2, sign: str = "+",
          max_iter: int = DEFAULT_GREEN_ITER) -> float:
    """G+(p) for sign '+', G-(p) for sign '-'; 0 for orbits that stay bounded."""
    if p.escaped:
        raise ValueError("point is flagged escaped; no finite coordinates")
    vals, _, _ = _green_kernel(m, [p.z], [p.w], sign, max_iter)
    return float(vals[0])


def classify_many(m: HenonMap, z0, w0, max_iter: int = DEFAULT_CLASSIFY_ITER):
    """Forward and backward escape data over arrays.

    Returns (fwd_exit, bwd_exit): iterate of first entry into V+_R / V-_R,
    or -1 where the orbit stayed out of the escape region through max_iter.
    """
    out = []
    for sign in "+-":
        z = np.array(z0, dtype=complex).ravel()
        w = np.array(w0, dtype=complex).ravel()
        step = step_many if sign == "+" else istep_many
        exit_it = np.full(z.size, -1, dtype=np.int64)
        for k in range(max_iter + 1):
            coord, other = (z, w) if sign == "+" else (w, z)
            entering = (exit_it < 0) & (np.abs(coord) > np.maximum(np.abs(other), m.R))
            exit_it[entering] = k
            if (exit_it >= 0).all():
                break
            zn, wn = step(m, z, w)
            live = (exit_it < 0) & np.isfinite(zn) & np.isfinite(wn)
            z = np.where(live, zn, z)
            w = np.where(live, wn, w)
        out.append(exit_it)
    return out[0], out[1]


def classify(m: HenonMap, p: Point2, max_iter: int = DEFAULT_CLASSIFY_ITER):
    """(forward, backward) OrbitClassification of one point."""
    fwd, bwd = classify_many(m, [p.z], [p.w], max_iter)
    f_esc, b_esc = int(fwd[0]), int(bwd[0])
    f = OrbitClassification(
        OrbitStatus.ESCAPES_FORWARD if f_esc >= 0 else OrbitStatus.BOUNDED_FORWARD,
        f_esc if f_esc >= 0 else None,
        truncated=f_esc < 0,
    )
    b = OrbitClassification(
        OrbitStatus.ESCAPES_BACKWARD if b_esc >= 0 else OrbitStatus.BOUNDED_BACKWARD,
        b_esc if b_esc >= 0 else None,
        truncated=b_esc < 0,
    )
    return f, b


# --- slices and field grids ---

@dataclass(frozen=True)
class Slice:
    """Complex line {base + t*direction : t in C} inside C^2."""
    base: Point2
    direction: tuple[complex, complex] = (1.0 + 0j, 0j)

    def points(self, ts):
        ts = np.asarray(ts, dtype=complex)
        dz, dw = self.direction
        return self.base.z + ts * dz, self.base.w + ts * dw


@dataclass(frozen=True)
class FieldGrid:
    """Row-major scalar field over a window of a slice.

    values[iy*nx + ix] belongs to t = x[ix] + i*y[iy].
    """
    window: tuple[float, float, float, float]     # x0, x1, y0, y1
    resolution: tuple[int, int]                   # nx, ny
    values: np.ndarray
    slice_: Slice
    sign: str = "+"
    mode: str = "green"

    def __post_init__(self):
        nx, ny = self.resolution
        if nx < 2 or ny < 2:
            raise ValueError("resolution must be at least 2x2")
        if self.values.size != nx * ny:
            raise ValueError("values length must equal nx*ny")
        x0, x1, y0, y1 = self.window
        if not (x1 > x0 and y1 > y0):
            raise ValueError("window sides must be positive")

    def axes(self):
        x0, x1, y0, y1 = self.window
        nx, ny = self.resolution
        return np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)

    def values2d(self):
        nx, ny = self.resolution
        return self.values.reshape(ny, nx)


def _grid_block(m: HenonMap, slice_: Slice, xs, ys, sign, max_iter, mode):
    tx, ty = np.meshgrid(xs, ys)
    ts = (tx + 1j * ty).ravel()
    pz, pw = slice_.points(ts)
    if mode == "green":
        vals, _, _ = _green_kernel(m, pz, pw, sign, max_iter)
        return vals
    if mode == "classify":
        z = np.array(pz, dtype=complex)
        w = np.array(pw, dtype=complex)
        step = step_many if sign == "+" else istep_many
        exit_it = np.full(z.size, -1, dtype=np.int64)
        for k in range(max_iter + 1):
            coord, other = (z, w) if sign == "+" else (w, z)
            entering = (exit_it < 0) & (np.abs(coord) > np.maximum(np.abs(other), m.R))
            exit_it[entering] = k
            if (exit_it >= 0).all():
                break
            zn, wn = step(m, z, w)
            live = (exit_it < 0) & np.isfinite(zn) & np.isfinite(wn)
            z = np.where(live, zn, z)
            w = np.where(live, wn, w)
        return exit_it.astype(float)
    raise ValueError("mode must be 'green' or 'classify'")


_BLOCK_ROWS = 16


def _block_args(m, slice_, window, resolution, sign, max_iter, mode):
    nx, ny = resolution
    xs = np.linspace(window[0], window[1], nx)
    ys = np.linspace(window[2], window[3], ny)
    for j0 in range(0, ny, _BLOCK_ROWS):
        yield m, slice_, xs, ys[j0:j0 + _BLOCK_ROWS], sign, max_iter, mode


def _run_block(args):
    m, slice_, xs, ys, sign, max_iter, mode = args
    return _grid_block(m, slice_, xs, ys, sign, max_iter, mode)


def julia_slice(m: HenonMap, slice_: Slice, window, resolution, sign: str = "+",
                max_iter: int | None = None, mode: str = "green",
                workers: int = 1) -> FieldGrid:
    """Field of G+-/G- values (or escape iterates) over a window of a slice.

    Work is split into fixed row blocks computed independently, so the output
    is identical for any worker count.
    """
    if max_iter is None:
        max_iter = DEFAULT_GREEN_ITER if mode == "green" else DEFAULT_CLASSIFY_ITER
    blocks = list(_block_args(m, slice_, window, resolution, sign, max_iter, mode))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, blocks))
    else:
        parts = [_run_block(b) for b in blocks]
    values = np.concatenate(parts)
    return FieldGrid(window=tuple(window), resolution=tuple(resolution),
                     values=values, slice_=slice_, sign=sign, mode=mode)


def julia_boundary_points(grid: FieldGrid, level: float = JULIA_LEVEL) -> np.ndarray:
    """Vertices of the marching-squares level set G = level, as (x, y) rows.

    A thin sublevel of the Hoelder-continuous Green function is the standard
    proxy for the Julia-set slice J = {G = 0}.
    """
    from .contours import marching_squares
    xs, ys = grid.axes()
    loops, opens = marching_squares(grid.values2d(), xs, ys, level)
    segs = loops + opens
    if not segs:
        return np.zeros((0, 2))
    return np.concatenate(segs, axis=0)


# --- serialization: CSV and 16-bit PNG with JSON sidecar ---

def _slice_fields(slice_: Slice):
    return [slice_.base.z.real, slice_.base.z.imag,
            slice_.base.w.real, slice_.base.w.imag,
            slice_.direction[0].real, slice_.direction[0].imag,
            slice_.direction[1].real, slice_.direction[1].imag]


def write_csv(grid: FieldGrid, path: str) -> None:
    nx, ny = grid.resolution
    with open(path, "w") as fh:
        fh.write("# nx,%d\n# ny,%d\n" % (nx, ny))
        fh.write("# window,%s\n" % ",".join(repr(v) for v in grid.window))
        fh.write("# slice,%s\n" % ",".join(repr(v) for v in _slice_fields(grid.slice_)))
        fh.write("# sign,%s\n# mode,%s\n" % (grid.sign, grid.mode))
        for v in grid.values:
            fh.write(repr(float(v)) + "\n")


def read_csv(path: str) -> FieldGrid:
    header = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, rest = line[1:].strip().partition(",")
                header[key] = rest
            else:
                values.append(float(line))
    nx, ny = int(header["nx"]), int(header["ny"])
    window = tuple(float(v) for v in header["window"].split(","))
    sf = [float(v) for v in header["slice"].split(",")]
    slice_ = Slice(Point2(complex(sf[0], sf[1]), complex(sf[2], sf[3])),
                   (complex(sf[4], sf[5]), complex(sf[6], sf[7])))
    return FieldGrid(window=window, resolution=(nx, ny),
                     values=np.array(values), slice_=slice_,
                     sign=header.get("sign", "+"), mode=header.get("mode", "green"))


def write_png(grid: FieldGrid, path: str) -> str:
    """16-bit grayscale PNG with the linear value mapping in a JSON sidecar."""
    from PIL import Image
    vmin = float(grid.values.min())
    vmax = float(grid.values.max())
    span = vmax - vmin if vmax > vmin else 1.0
    scaled = np.round((grid.values2d() - vmin) / span * 65535.0).astype(np.uint16)
    Image.fromarray(scaled).save(path)
    sidecar = path + ".json"
    meta = {
        "vmin": vmin, "vmax": vmax,
        "nx": grid.resolution[0], "ny": grid.resolution[1],
        "window": list(grid.window),
        "slice": _slice_fields(grid.slice_),
        "sign": grid.sign, "mode": grid.mode,
    }
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=1)
    return sidecar
