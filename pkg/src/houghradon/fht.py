"""Fast Hough Transform over dyadic line patterns.

A square image of side ``h`` (a power of two) is transformed once per
angular quadrant. Each quadrant first re-orients the image so that its line
family becomes ``x = s + D(t, y)`` (``D`` the dyadic staircase of slope
``t``), then runs the butterfly on a strip zero-padded to width ``2h``.
Column shifts are cyclic modulo ``2h``: column ``s >= h`` holds the line
whose row-0 intercept is ``s - 2h``, so every pixel is counted exactly once
per slope.

Re-orientation per quadrant (image coordinates: row = y, column = x)::

    VERT_RIGHT  phi in [-45, 0)   image as-is            x = x0 + tau*y
    VERT_LEFT   phi in [0, 45)    mirrored columns       x = x0 - tau*y
    HORZ_DOWN   phi in [45, 90)   transposed, mirrored   y = y0 - tau*x
    HORZ_UP     phi in [90, 135)  transposed             y = y0 + tau*x

``fht_full`` stitches the four ``h x 2h`` blocks into one
``(4h - 3) x 2h`` map with rows in ascending angle. Within the stitched map
column ``c`` always equals the row-0 (or column-0 for horizontal bands)
intercept modulo ``2h``, so the boundary rows at 0, 45 and 90 degrees
coincide between neighbouring quadrants; each is stored once, owned by
the higher quadrant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class Quadrant(enum.IntEnum):
    VERT_RIGHT = 0
    VERT_LEFT = 1
    HORZ_DOWN = 2
    HORZ_UP = 3

    @property
    def angle_range(self) -> tuple[float, float]:
        """Half-open range of normal angles in degrees."""
        lo = -45.0 + 45.0 * self.value
        return lo, lo + 45.0

    @property
    def rows_descend(self) -> bool:
        """True when stitched rows run against the slope index ``t``."""
        return self in (Quadrant.VERT_RIGHT, Quadrant.HORZ_DOWN)

    @property
    def mirrored(self) -> bool:
        return self in (Quadrant.VERT_LEFT, Quadrant.HORZ_DOWN)


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def _check_side(h: int) -> None:
    if not is_power_of_two(h):
        raise ValueError(f"side length must be a power of two, got {h}")


@lru_cache(maxsize=None)
def _pattern(h: int, t: int) -> tuple[int, ...]:
    if h == 1:
        return (0,)
    half = _pattern(h // 2, t // 2)
    offset = t // 2 + t % 2
    return half + tuple(d + offset for d in half)


def dyadic_pattern(h: int, t: int) -> list[int]:
    """Per-row displacements ``D(t, y)`` of the dyadic line of slope ``t``.

    >>> dyadic_pattern(4, 3)
    [0, 1, 2, 3]
    >>> dyadic_pattern(8, 3)
    [0, 0, 1, 1, 2, 2, 3, 3]
    """
    _check_side(h)
    if not 0 <= t < h:
        raise ValueError(f"slope must satisfy 0 <= t < {h}, got {t}")
    return list(_pattern(h, t))


def pattern_table(h: int) -> np.ndarray:
    """All patterns of side ``h`` as an ``(h, h)`` array indexed ``[t, y]``."""
    _check_side(h)
    return np.array([_pattern(h, t) for t in range(h)], dtype=np.int64)


# ----------------------------------------------------------------- containers


@dataclass(frozen=True)
class HoughImage:
    """Stitched four-quadrant Hough map of an ``h x h`` image.

    ``grid`` has ``4h - 3`` rows (slope bands in ascending angle) and ``2h``
    columns (intercept modulo ``2h``).
    """

    grid: np.ndarray
    h: int

    def __post_init__(self):
        _check_side(self.h)
        expected = hough_shape(self.h)
        if self.grid.shape[-2:] != expected:
            raise ValueError(f"grid shape {self.grid.shape} does not match h={self.h}, expected {expected}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid.shape

    def band(self, q: Quadrant) -> np.ndarray:
        """The ``h`` stitched rows covering quadrant ``q`` (shared rows included)."""
        start = int(q) * (self.h - 1)
        return self.grid[..., start : start + self.h, :]

    def __array__(self, dtype=None, copy=None):
        return self.grid if dtype is None else self.grid.astype(dtype)


def hough_shape(h: int) -> tuple[int, int]:
    return 4 * h - 3, 2 * h


def side_from_hough_shape(rows: int, cols: int) -> int:
    """Recover ``h`` from a stitched map shape, validating both axes."""
    h = cols // 2
    if cols % 2 or not is_power_of_two(h) or rows != 4 * h - 3:
        raise ValueError(f"({rows}, {cols}) is not a stitched Hough shape (4h-3, 2h)")
    return h


def band_row(q: Quadrant, t, h: int):
    """Stitched row index of slope ``t`` inside quadrant ``q``'s band."""
    local = (h - 1) - t if q.rows_descend else t
    return int(q) * (h - 1) + local


# --------------------------------------------------------------------- kernel


def _work_dtype(arr: np.ndarray):
    if arr.dtype.kind in "biu":
        return np.int64
    if arr.dtype == np.float32:
        return np.float32
    return np.float64


def _square_input(img, *, min_ndim: int = 2) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim < min_ndim:
        raise ValueError(f"expected at least {min_ndim} dimensions, got shape {arr.shape}")
    h, w = arr.shape[-2:]
    if h != w:
        raise ValueError(f"image must be square, got {h}x{w}")
    _check_side(h)
    return arr.astype(_work_dtype(arr), copy=False)


def _orient(img: np.ndarray, q: Quadrant) -> np.ndarray:
    if q in (Quadrant.HORZ_DOWN, Quadrant.HORZ_UP):
        img = np.swapaxes(img, -1, -2)
    if q.mirrored:
        img = img[..., ::-1]
    return img


def _orient_adjoint(local: np.ndarray, q: Quadrant) -> np.ndarray:
    if q.mirrored:
        local = local[..., ::-1]
    if q in (Quadrant.HORZ_DOWN, Quadrant.HORZ_UP):
        local = np.swapaxes(local, -1, -2)
    return local


def _pad_strip(local: np.ndarray) -> np.ndarray:
    h = local.shape[-1]
    strip = np.zeros(local.shape[:-1] + (2 * h,), dtype=local.dtype)
    strip[..., :h] = local
    return strip


def _butterfly(strip: np.ndarray) -> np.ndarray:
    """Dyadic butterfly over rows of ``strip`` (..., h, W) -> (..., h, W)."""
    *lead, h, width = strip.shape
    # blocks of height m: shape (..., h // m, m, width)
    cur = strip.reshape(*lead, h, 1, width)
    m = 1
    while m < h:
        top = cur[..., 0::2, :, :]
        bot = cur[..., 1::2, :, :]
        new = np.empty(tuple(lead) + (top.shape[-3], 2 * m, width), dtype=strip.dtype)
        for k in range(m):
            b = bot[..., k, :]
            a = top[..., k, :]
            new[..., 2 * k, :] = a + np.roll(b, -k, axis=-1)
            new[..., 2 * k + 1, :] = a + np.roll(b, -(k + 1), axis=-1)
        cur = new
        m *= 2
    return cur[..., 0, :, :]


def _butterfly_adjoint(grad: np.ndarray) -> np.ndarray:
    """Transpose of :func:`_butterfly`."""
    *lead, h, width = grad.shape
    cur = grad.reshape(*lead, 1, h, width)
    m = h
    while m > 1:
        half = m // 2
        nb = cur.shape[-3]
        top = np.empty(tuple(lead) + (nb, half, width), dtype=grad.dtype)
        bot = np.empty_like(top)
        for k in range(half):
            g0 = cur[..., 2 * k, :]
            g1 = cur[..., 2 * k + 1, :]
            top[..., k, :] = g0 + g1
            bot[..., k, :] = np.roll(g0, k, axis=-1) + np.roll(g1, k + 1, axis=-1)
        cur = np.stack([top, bot], axis=-3).reshape(*lead, 2 * nb, half, width)
        m = half
    return cur[..., :, 0, :]


def fht_quadrant(img, q: Quadrant) -> np.ndarray:
    """Fast Hough Transform of one quadrant, ``h`` rows (slope) x ``2h`` columns.

    ``out[t, s] = sum_y P[y, (s + D(t, y)) mod 2h]`` where ``P`` is the
    quadrant-oriented image zero-padded to width ``2h``. Integer inputs give
    integer (exact) results. Leading batch dimensions are allowed.
    """
    arr = _square_input(img)
    return _butterfly(_pad_strip(_orient(arr, Quadrant(q))))


def naive_fht_quadrant(img, q: Quadrant) -> np.ndarray:
    """Direct evaluation of the same pattern sums, one slope at a time."""
    arr = _square_input(img)
    strip = _pad_strip(_orient(arr, Quadrant(q)))
    h, width = strip.shape[-2:]
    out = np.zeros(strip.shape, dtype=strip.dtype)
    cols = np.arange(width)
    rows = np.arange(h)[:, None]
    for t in range(h):
        shift = np.array(dyadic_pattern(h, t))[:, None]
        idx = (cols[None, :] + shift) % width
        out[..., t, :] = strip[..., rows, idx].sum(axis=-2)
    return out


# ------------------------------------------------------------------ stitching


@lru_cache(maxsize=None)
def _column_source(h: int) -> np.ndarray:
    # stitched column c <- raw column (h - 1 - c) mod 2h for mirrored quadrants
    return (h - 1 - np.arange(2 * h)) % (2 * h)


def _to_band(raw: np.ndarray, q: Quadrant) -> np.ndarray:
    h = raw.shape[-2]
    if q.mirrored:
        raw = raw[..., _column_source(h)]
    if q.rows_descend:
        raw = raw[..., ::-1, :]
    return raw


def _from_band(band: np.ndarray, q: Quadrant) -> np.ndarray:
    h = band.shape[-2]
    if q.rows_descend:
        band = band[..., ::-1, :]
    if q.mirrored:
        raw = np.empty_like(band)
        raw[..., _column_source(h)] = band
        band = raw
    return band


def fht_array(img) -> np.ndarray:
    """Stitched FHT on the last two axes: (..., h, h) -> (..., 4h-3, 2h)."""
    arr = _square_input(img)
    h = arr.shape[-1]
    parts = []
    for q in Quadrant:
        band = _to_band(_butterfly(_pad_strip(_orient(arr, q))), q)
        parts.append(band if q is Quadrant.HORZ_UP else band[..., : h - 1, :])
    return np.concatenate(parts, axis=-2)


def tfht_array(grad) -> np.ndarray:
    """Adjoint of :func:`fht_array`: (..., 4h-3, 2h) -> (..., h, h)."""
    g = np.asarray(grad)
    h = side_from_hough_shape(*g.shape[-2:])
    g = g.astype(_work_dtype(g), copy=False)
    out = None
    for q in Quadrant:
        start = int(q) * (h - 1)
        if q is Quadrant.HORZ_UP:
            band = g[..., start : start + h, :]
        else:
            # shared last row is owned by the next quadrant
            band = np.zeros(g.shape[:-2] + (h, 2 * h), dtype=g.dtype)
            band[..., : h - 1, :] = g[..., start : start + h - 1, :]
        local = _butterfly_adjoint(_from_band(band, q))[..., :h]
        contrib = _orient_adjoint(local, q)
        out = contrib.copy() if out is None else out + contrib
    return out


def fht_full(img) -> HoughImage:
    """Four-quadrant stitched Fast Hough Transform of an ``h x h`` image."""
    arr = _square_input(img)
    if arr.ndim != 2:
        raise ValueError(f"fht_full expects a single 2-D image, got shape {arr.shape}")
    return HoughImage(fht_array(arr), arr.shape[-1])


def tfht(hough) -> np.ndarray:
    """Transposed FHT: exact adjoint of :func:`fht_full`."""
    if isinstance(hough, HoughImage):
        grid, h = hough.grid, hough.h
        if grid.ndim != 2:
            raise ValueError("tfht expects a single Hough map")
        return tfht_array(grid)
    grid = np.asarray(hough)
    if grid.ndim != 2:
        raise ValueError(f"tfht expects a 2-D Hough map, got shape {grid.shape}")
    return tfht_array(grid)


def fht_featuremap(fm) -> np.ndarray:
    """Per-channel stitched FHT of a ``(C, h, h)`` feature map."""
    arr = np.asarray(fm)
    if arr.ndim != 3:
        raise ValueError(f"feature map must be (C, H, W), got {arr.shape}")
    return fht_array(arr)


def tfht_featuremap(fm) -> np.ndarray:
    """Per-channel adjoint FHT of a ``(C, 4h-3, 2h)`` feature map."""
    arr = np.asarray(fm)
    if arr.ndim != 3:
        raise ValueError(f"feature map must be (C, H, W), got {arr.shape}")
    return tfht_array(arr)
