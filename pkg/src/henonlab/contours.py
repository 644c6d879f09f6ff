"""Marching squares and polyline utilities shared by the Julia-slice and
island-search code."""

from __future__ import annotations

import numpy as np


def _interp(p0, p1, v0, v1, level):
    t = (level - v0) / (v1 - v0)
    return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))


def marching_squares(values, xs, ys, level, valid=None):
    """Extract the level set {values = level} from a grid.

    values is (ny, nx); xs, ys are the axis coordinates.  Cells touching an
    invalid corner are skipped, so contours passing through masked regions
    come out as open polylines.  Returns (loops, open_polylines), each a list
    of (k, 2) float arrays; loops are closed (last vertex != first, closure
    implied) and oriented counterclockwise.
    """
    V = np.asarray(values, dtype=float)
    ny, nx = V.shape
    if valid is None:
        valid = np.isfinite(V)
    else:
        valid = np.asarray(valid, dtype=bool) & np.isfinite(V)

    # edge id: (iy, ix, 0) horizontal edge from (ix,iy) to (ix+1,iy)
    #          (iy, ix, 1) vertical edge from (ix,iy) to (ix,iy+1)
    verts = {}

    def edge_vertex(eid):
        if eid in verts:
            return verts[eid]
        iy, ix, orient = eid
        if orient == 0:
            p = _interp((xs[ix], ys[iy]), (xs[ix + 1], ys[iy]),
                        V[iy, ix], V[iy, ix + 1], level)
        else:
            p = _interp((xs[ix], ys[iy]), (xs[ix], ys[iy + 1]),
                        V[iy, ix], V[iy + 1, ix], level)
        verts[eid] = p
        return p

    segments = []
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            if not (valid[iy, ix] and valid[iy, ix + 1]
                    and valid[iy + 1, ix] and valid[iy + 1, ix + 1]):
                continue
            v00 = V[iy, ix] - level
            v10 = V[iy, ix + 1] - level
            v01 = V[iy + 1, ix] - level
            v11 = V[iy + 1, ix + 1] - level
            case = (v00 > 0) | ((v10 > 0) << 1) | ((v11 > 0) << 2) | ((v01 > 0) << 3)
            if case in (0, 15):
                continue
            bottom = (iy, ix, 0)
            top = (iy + 1, ix, 0)
            left = (iy, ix, 1)
            right = (iy, ix + 1, 1)
            # directed so the positive region lies on the left of each segment
            table = {
                1: [(bottom, left)], 2: [(right, bottom)], 3: [(right, left)],
                4: [(top, right)], 6: [(top, bottom)],
                7: [(top, left)], 8: [(left, top)], 9: [(bottom, top)],
                11: [(right, top)], 12: [(left, right)], 13: [(bottom, right)],
                14: [(left, bottom)],
            }
            if case in (5, 10):
                center = (v00 + v10 + v01 + v11) / 4.0
                if case == 5:
                    segs = [(top, left), (bottom, right)] if center > 0 \
                        else [(bottom, left), (top, right)]
                else:
                    segs = [(left, bottom), (right, top)] if center > 0 \
                        else [(right, bottom), (left, top)]
            else:
                segs = table[case]
            segments.extend(segs)

    # chain segments into loops / open polylines via shared edge ids
    succ = {}
    for a, b in segments:
        succ.setdefault(a, []).append(b)
    unused = {s: list(t) for s, t in succ.items()}

    def pop_next(eid):
        lst = unused.get(eid)
        if lst:
            return lst.pop()
        return None

    loops, opens = [], []
    starts = [a for a, _ in segments]
    for start in starts:
        if not unused.get(start):
            continue
        chain = [start]
        cur = start
        while True:
            nxt = pop_next(cur)
            if nxt is None:
                break
            chain.append(nxt)
            cur = nxt
            if cur == start:
                break
        pts = np.array([edge_vertex(e) for e in chain])
        if chain[0] == chain[-1] and len(chain) > 3:
            loop = pts[:-1]
            if _signed_area(loop) < 0:
                loop = loop[::-1]
            loops.append(loop)
        else:
            opens.append(pts)
    return loops, opens


def _signed_area(poly) -> float:
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def winding_number(points, center=0j) -> int:
    """Winding of a closed sampled curve around center, by summing principal
    argument increments.  Valid while consecutive steps turn by less than pi."""
    v = np.asarray(points, dtype=complex).ravel() - center
    ratios = np.roll(v, -1) / v
    return int(round(np.sum(np.angle(ratios)) / (2.0 * np.pi)))


def point_in_polygon(poly, pts) -> np.ndarray:
    """Even-odd point-in-polygon test; poly is (k, 2), pts is (m, 2)."""
    poly = np.asarray(poly, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(pts.shape[0], dtype=bool)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for j in range(poly.shape[0]):
        crosses = ((y0[j] > y) != (y1[j] > y))
        if not crosses.any():
            continue
        xc = x0[j] + (y - y0[j]) / (y1[j] - y0[j]) * (x1[j] - x0[j])
        inside ^= crosses & (x < xc)
    return inside


def resample_closed(poly, n: int) -> np.ndarray:
    """Resample a closed polyline to n points, uniformly by arclength."""
    poly = np.asarray(poly, dtype=float)
    closed = np.vstack([poly, poly[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    targets = np.linspace(0.0, total, n, endpoint=False)
    out = np.empty((n, 2))
    j = np.searchsorted(s, targets, side="right") - 1
    j = np.clip(j, 0, len(seg) - 1)
    t = (targets - s[j]) / np.where(seg[j] > 0, seg[j], 1.0)
    out[:, 0] = closed[j, 0] + t * (closed[j + 1, 0] - closed[j, 0])
    out[:, 1] = closed[j, 1] + t * (closed[j + 1, 1] - closed[j, 1])
    return out


def polygon_centroid(poly) -> tuple[float, float]:
    poly = np.asarray(poly, dtype=float)
    return float(poly[:, 0].mean()), float(poly[:, 1].mean())
