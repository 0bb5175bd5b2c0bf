"""Brute-force references that share no code path with the package under test."""
import math

import numpy as np


def point_in_polygon(px, py, ring):
    """Crossing-number test for one point (pure Python, half-open in y)."""
    inside = False
    pts = [tuple(map(float, p)) for p in ring]
    if pts[0] != pts[-1]:
        pts.append(pts[0])
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        if (y0 > py) != (y1 > py):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < xint:
                inside = not inside
    return inside


def brute_fill(ring, width, height):
    return np.array([[point_in_polygon(x + 0.5, y + 0.5, ring) for x in range(width)]
                     for y in range(height)], dtype=bool)


def brute_fill_fast(ring, width, height):
    """Same crossing-number rule, broadcast over all pixel centers at once."""
    ring = np.asarray(ring, dtype=np.float64)
    if not np.array_equal(ring[0], ring[-1]):
        ring = np.vstack([ring, ring[:1]])
    px = (np.arange(width) + 0.5)[None, :]
    py = (np.arange(height) + 0.5)[:, None]
    inside = np.zeros((height, width), dtype=bool)
    for (x0, y0), (x1, y1) in zip(ring[:-1], ring[1:]):
        crosses = (y0 > py) != (y1 > py)
        if not crosses.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (px < xint)
    return inside


def segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    t = 0.0 if seg2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / seg2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def painter_labels(inner_rings, outer_rings, bands, width, height):
    """Paint instances back to front, pixel by pixel.

    Instance k first blanks its whole outer region (it is opaque there), then
    claims the part of that region outside its inner ring. ``bands[k]`` is the
    stroke band for single-ring instances (None otherwise); it is used both as
    the claimed region and as part of the opaque region.
    """
    owner = np.zeros((height, width), dtype=np.int32)
    for k, (inner, outer, band) in enumerate(zip(inner_rings, outer_rings, bands), start=1):
        out_fill = brute_fill_fast(outer, width, height)
        if band is None:
            claim = out_fill & ~brute_fill_fast(inner, width, height)
            cover = out_fill
        else:
            claim = band
            cover = out_fill | band
        for y in range(height):
            for x in range(width):
                if cover[y, x]:
                    owner[y, x] = k if claim[y, x] else 0
    return owner
