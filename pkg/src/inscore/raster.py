"""Pixel masks, stroke rendering, hollow shells and occlusion resolution.

Masks are ``(H, W)`` boolean numpy arrays indexed ``mask[y, x]``; the image
is an ``(H, W, 3)`` uint8 array. Filled regions sample pixel ``(x, y)`` at
its center ``(x + 0.5, y + 0.5)``; strokes treat pixel ``(x, y)`` as the
integer point ``(x, y)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ContourShape

__all__ = [
    "LabelMap",
    "blank_canvas",
    "fill_polygon",
    "stroke_mask",
    "draw_polylines",
    "outer_shell",
    "hollow_mask",
    "resolve_visibility",
    "build_label_map",
]

_SUPERSAMPLE = 4


def blank_canvas(width: int, height: int) -> np.ndarray:
    return np.zeros((height, width, 3), dtype=np.uint8)


def fill_polygon(ring: np.ndarray, width: int, height: int) -> np.ndarray:
    """Even-odd fill sampled at pixel centers, clipped to the canvas.

    A pixel is set iff a ray from its center towards +x crosses the ring an
    odd number of times. Edges own the rows whose center ``y`` satisfies
    ``min(y0, y1) <= y < max(y0, y1)``; a crossing only counts when it lies
    strictly to the right of the center.
    """
    mask = np.zeros((height, width), dtype=bool)
    ring = np.asarray(ring, dtype=np.float64)
    if len(ring) < 3:
        return mask
    p0 = ring[:-1]
    p1 = ring[1:]
    if not np.array_equal(ring[0], ring[-1]):
        p0 = ring
        p1 = np.roll(ring, -1, axis=0)
    x0, y0 = p0[:, 0], p0[:, 1]
    x1, y1 = p1[:, 0], p1[:, 1]
    ylo = np.minimum(y0, y1)
    yhi = np.maximum(y0, y1)
    finite = np.isfinite(ylo) & np.isfinite(yhi)
    ylo = np.where(finite, ylo, 0.0)
    yhi = np.where(finite, yhi, 0.0)
    # candidate rows, one extra on each side; the exact test below trims them
    r_first = np.maximum(np.ceil(np.maximum(ylo, -1.0) - 0.5) - 1, 0).astype(np.int64)
    r_last = np.minimum(np.ceil(np.minimum(yhi, height + 1.0) - 0.5), height - 1).astype(np.int64)
    nrows = np.maximum(r_last - r_first + 1, 0)
    keep = nrows > 0
    if not keep.any():
        return mask
    nrows = nrows[keep]
    edge = np.repeat(np.flatnonzero(keep), nrows)
    starts = np.repeat(np.cumsum(nrows) - nrows, nrows)
    rows = r_first[edge] + (np.arange(len(edge)) - starts)
    yc = rows + 0.5
    ok = (ylo[edge] <= yc) & (yc < yhi[edge])
    edge, rows, yc = edge[ok], rows[ok], yc[ok]
    xc = x0[edge] + (yc - y0[edge]) * (x1[edge] - x0[edge]) / (y1[edge] - y0[edge])
    # number of pixel centers strictly left of the crossing, corrected for rounding in ceil()
    xc = np.clip(xc, -2.0, width + 2.0)
    cols = np.ceil(xc - 0.5)
    cols -= (cols - 0.5) >= xc
    cols += (cols + 0.5) < xc
    cols = np.clip(cols, 0, width).astype(np.int64)
    if rows.size == 0:
        return mask
    # every row holds an even number of crossings, so pixels left of the
    # leftmost crossing and right of the rightmost one are outside
    r0, r1 = rows.min(), rows.max() + 1
    c0, c1 = cols.min(), cols.max()
    if c1 <= c0:
        return mask
    span = c1 - c0 + 1
    hits = np.bincount((rows - r0) * span + (cols - c0), minlength=(r1 - r0) * span)
    toggles = (hits & 1).astype(np.uint8).reshape(r1 - r0, span)
    # pixel x sees the crossings with cols > x
    parity = np.bitwise_xor.accumulate(toggles[:, ::-1], axis=1)[:, ::-1]
    mask[r0:r1, c0:c1] = parity[:, 1:].astype(bool)
    return mask

def _capsule_spans(a: np.ndarray, b: np.ndarray, radius: float, width: int, height: int,
                   tails: np.ndarray | None = None):
    """Row spans of the union of capsules around segments ``a[i] -> b[i]``.

    Each segment contributes the disk around its start point and the band
    along its side; ``tails`` are extra disk centers (open polyline ends).
    Returns (rows, x_first, x_last) for every non-empty span; pixel (x, y)
    is covered iff the point (x, y) is within ``radius`` of a segment.
    """
    if tails is not None and len(tails):
        a = np.concatenate([a, tails])
        b = np.concatenate([b, tails])
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    keep = (np.isfinite(ax) & np.isfinite(ay) & np.isfinite(bx) & np.isfinite(by)
            & (np.maximum(ax, bx) >= -radius) & (np.minimum(ax, bx) <= width - 1 + radius)
            & (np.maximum(ay, by) >= -radius) & (np.minimum(ay, by) <= height - 1 + radius))
    ax, ay, bx, by = ax[keep], ay[keep], bx[keep], by[keep]
    empty = np.zeros(0, dtype=np.int64)
    if ax.size == 0:
        return empty, empty, empty

    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    length = np.sqrt(length2)
    reach = radius * length
    # near-axis segments are snapped to the axis; shifts the band by < 1e-12 * length
    dx = np.where(np.abs(dx) <= 1e-12 * length, 0.0, dx)
    dy = np.where(np.abs(dy) <= 1e-12 * length, 0.0, dy)
    # bounds on u = x - ax from the side band, each linear in the row: c0 + c1 * y
    #   0 <= u dx + (y - ay) dy <= |d|^2   and   |u dy - (y - ay) dx| <= radius |d|
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = np.where(dx != 0, dy / dx, 0.0)
        p_a = np.where(dx != 0, ay * sx, 0.0)
        p_b = np.where(dx != 0, length2 / dx, 0.0)
        sy = np.where(dy != 0, dx / dy, 0.0)
        q_a = np.where(dy != 0, -ay * sy, 0.0)
        q_b = np.where(dy != 0, reach / np.abs(np.where(dy != 0, dy, 1.0)), 0.0)
    # p range: [p_a - sx y, p_a + p_b - sx y] ordered by the sign of dx
    p_lo0 = np.where(dx > 0, p_a, p_a + p_b)
    p_hi0 = np.where(dx > 0, p_a + p_b, p_a)
    flat_x = dx == 0
    flat_y = dy == 0

    y_first = np.maximum(np.ceil(np.minimum(ay, by) - radius), 0)
    y_last = np.minimum(np.floor(np.maximum(ay, by) + radius), height - 1)
    nrows = np.maximum(y_last - y_first + 1, 0).astype(np.int64)
    seg = np.repeat(np.arange(ax.size), nrows)
    if seg.size == 0:
        return empty, empty, empty
    starts = np.repeat(np.cumsum(nrows) - nrows, nrows)
    y = y_first[seg] + (np.arange(seg.size) - starts)

    ax_s = ax[seg]
    h = radius * radius - (y - ay[seg]) ** 2
    disk = h >= 0
    root = np.sqrt(np.maximum(h, 0.0))
    lo = np.where(disk, ax_s - root, np.inf)
    hi = np.where(disk, ax_s + root, -np.inf)

    sx_s = sx[seg]
    band_lo = np.maximum(p_lo0[seg] - sx_s * y, q_a[seg] + sy[seg] * y - q_b[seg])
    band_hi = np.minimum(p_hi0[seg] - sx_s * y, q_a[seg] + sy[seg] * y + q_b[seg])
    special = flat_x[seg] | flat_y[seg]
    if special.any():
        idx = np.flatnonzero(special)
        k = seg[idx]
        ey = y[idx] - ay[k]
        along = ey * dy[k]
        p_ok = np.where(flat_x[k], (along >= 0) & (along <= length2[k]), True)
        q_ok = np.where(flat_y[k], np.abs(ey * dx[k]) <= reach[k], True)
        blo = np.where(flat_x[k], q_a[k] + sy[k] * y[idx] - q_b[k], band_lo[idx])
        bhi = np.where(flat_x[k], q_a[k] + sy[k] * y[idx] + q_b[k], band_hi[idx])
        blo = np.where(flat_y[k], p_lo0[k] - sx[k] * y[idx], blo)
        bhi = np.where(flat_y[k], p_hi0[k] - sx[k] * y[idx], bhi)
        ok = p_ok & q_ok & (length2[k] > 0)
        band_lo[idx] = np.where(ok, blo, np.inf)
        band_hi[idx] = np.where(ok, bhi, -np.inf)
    band_lo += ax_s
    band_hi += ax_s
    band = band_lo <= band_hi
    lo = np.where(band, np.minimum(lo, band_lo), lo)
    hi = np.where(band, np.maximum(hi, band_hi), hi)

    # the capsule is convex, so its pieces on one row join into a single interval
    x_first = np.maximum(np.ceil(lo), 0)
    x_last = np.minimum(np.floor(hi), width - 1)
    ok = x_first <= x_last
    return y[ok].astype(np.int64), x_first[ok].astype(np.int64), x_last[ok].astype(np.int64)


def _segments(rings: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Segment starts, ends, and the end points of open rings."""
    rings = [np.asarray(r, dtype=np.float64).reshape(-1, 2) for r in rings]
    a = [r[:-1] if len(r) > 1 else r for r in rings]
    b = [r[1:] if len(r) > 1 else r for r in rings]
    tails = [r[-1:] for r in rings if len(r) > 1 and not np.array_equal(r[0], r[-1])]
    return np.concatenate(a), np.concatenate(b), (np.concatenate(tails) if tails else None)


def _stroke_rows(rings: Sequence[np.ndarray], line_width: float, width: int, height: int):
    """(first_row, mask of the covered row band) or None when nothing is covered."""
    if len(rings) == 0:
        return None
    a, b, tails = _segments(rings)
    rows, x0, x1 = _capsule_spans(a, b, line_width / 2.0, width, height, tails)
    if rows.size == 0:
        return None
    r_lo = int(rows.min())
    nrows = int(rows.max()) - r_lo + 1
    stride = width + 1
    base = (rows - r_lo) * stride
    size = nrows * stride
    edges = np.bincount(base + x0, minlength=size) - np.bincount(base + x1 + 1, minlength=size)
    band = np.cumsum(edges.reshape(nrows, stride)[:, :-1], axis=1) > 0
    return r_lo, band


def stroke_mask(rings: Sequence[np.ndarray], line_width: float, width: int, height: int) -> np.ndarray:
    """Pixels within ``line_width / 2`` of any ring edge (round joins and caps)."""
    mask = np.zeros((height, width), dtype=bool)
    hit = _stroke_rows(rings, line_width, width, height)
    if hit is not None:
        r_lo, band = hit
        mask[r_lo:r_lo + len(band)] = band
    return mask


def _stroke_coverage(rings: Sequence[np.ndarray], line_width: float, width: int, height: int) -> np.ndarray:
    """Fractional coverage from a 4x4 supersampled stroke."""
    f = _SUPERSAMPLE
    # sub-sample (i, j) of pixel (x, y) sits at (x + (i + 0.5) / f - 0.5, ...)
    scaled = [(np.asarray(r, dtype=np.float64) + 0.5) * f - 0.5 for r in rings]
    fine = stroke_mask(scaled, line_width * f, width * f, height * f)
    return fine.reshape(height, f, width, f).mean(axis=(1, 3))


def draw_polylines(image: np.ndarray, shape: ContourShape | Sequence[np.ndarray], line_width: float,
                   antialias: bool = False) -> np.ndarray:
    """Stroke every ring of ``shape`` in white onto ``image`` (in place, also returned).

    ``image`` is (H, W, 3) or a single (H, W) channel.
    """
    if line_width < 1:
        raise ValueError(f"line_width must be >= 1, got {line_width}")
    rings = list(shape.rings) if isinstance(shape, ContourShape) else list(shape)
    if not rings:
        return image
    H, W = image.shape[:2]
    if antialias:
        cover = _stroke_coverage(rings, line_width, W, H)
        if image.ndim == 3:
            cover = cover[..., None]
        blended = image * (1.0 - cover) + 255.0 * cover
        image[...] = np.round(blended).astype(np.uint8)
    else:
        hit = _stroke_rows(rings, line_width, W, H)
        if hit is not None:
            r_lo, band = hit
            image[r_lo:r_lo + len(band)][band] = 255
    return image


def outer_shell(shape: ContourShape, width: int, height: int, line_width: float | None = None) -> np.ndarray:
    """Filled outermost ring; single-ring shapes also include their stroke band."""
    out = fill_polygon(shape.outer, width, height)
    if len(shape) == 1 and line_width is not None:
        out |= stroke_mask([shape.outer], line_width, width, height)
    return out


def hollow_mask(shape: ContourShape, width: int, height: int, line_width: float | None = None) -> np.ndarray:
    """Outer fill minus inner fill. A single ring has no hollow, so its stroke band is used."""
    if len(shape) == 0:
        raise ValueError("shape has no rings")
    if len(shape) == 1:
        if line_width is None:
            raise ValueError("line_width is required for single-ring shapes")
        return stroke_mask([shape.outer], line_width, width, height)
    return fill_polygon(shape.outer, width, height) & ~fill_polygon(shape.inner, width, height)


def resolve_visibility(hollow: Sequence[np.ndarray], outer: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Visible part of each hollow mask: ``V_k = S_k minus the union of outer shells k+1..K``."""
    if len(hollow) != len(outer):
        raise ValueError(f"got {len(hollow)} hollow masks but {len(outer)} outer shells")
    if not hollow:
        return []
    shape = hollow[0].shape
    for m in (*hollow, *outer):
        if m.shape != shape:
            raise ValueError(f"mask shape {m.shape} differs from {shape}")
    covered = np.zeros(shape, dtype=bool)
    visible: list[np.ndarray] = [None] * len(hollow)  # type: ignore[list-item]
    for k in range(len(hollow) - 1, -1, -1):
        visible[k] = hollow[k] & ~covered
        covered |= outer[k]
    return visible


@dataclass(frozen=True, eq=False)
class LabelMap:
    """``labels[y, x]`` is the 1-based instance slot owning the pixel (0 = background)."""

    labels: np.ndarray
    categories: np.ndarray

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def category_map(self) -> np.ndarray:
        lut = np.concatenate([[0], self.categories]).astype(np.int32)
        return lut[self.labels]


def build_label_map(visibility: Sequence[np.ndarray], categories: Sequence[int],
                    shape: tuple[int, int] | None = None) -> LabelMap:
    if len(visibility) != len(categories):
        raise ValueError(f"got {len(visibility)} masks but {len(categories)} categories")
    if shape is None:
        if not visibility:
            raise ValueError("shape is required when there are no masks")
        shape = visibility[0].shape
    labels = np.zeros(shape, dtype=np.int32)
    for k, v in enumerate(visibility, start=1):
        if (labels[v] != 0).any():
            raise ValueError(f"visibility mask {k} overlaps an earlier instance")
        labels[v] = k
    return LabelMap(labels, np.asarray(categories, dtype=np.int32))
