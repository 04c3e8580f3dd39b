"""HoughToRadon (HRT) and RadonToHough (RHT) transforms.

HRT resamples a stitched FHT map, which lives in the (intercept ``s``,
slope ``t``) space, onto a uniform (radius ``rho``, normal angle ``phi``)
grid by nearest-neighbour gather. RHT is its exact adjoint (scatter-add)
and serves as the transposed layer during backpropagation.

Output layout: ``n`` rows, one per angle ``phi_j = -45 + j * 180 / n``
degrees; ``round(scale_x * floor(w1 * sqrt(2)))`` columns, column ``i``
sampling ``rho = i / scale_x``. The radius is measured from the centre of
pixel (0, 0), lines being ``x cos(phi) + y sin(phi) = rho`` with x the column
and y the row index.

Geometry of the lookup. For ``-45 <= phi < 45``::

    t = -w1 * tan(-phi),   s = rho / (scale_x * w1) * sqrt(t**2 + w1**2)

and for ``45 <= phi < 135``::

    t = -w1 / tan(phi),    s = rho / (scale_x * w1) * sqrt(t**2 + w1**2)

``s`` is then the row-0 intercept (vertical families) or column-0 intercept
(horizontal families), which is exactly the stitched column of
:mod:`houghradon.fht`. ``|t|`` is the run over ``w1`` pixels; dyadic
patterns span ``w1 - 1`` steps, so the slope row is
``round(|t| * (w1 - 1) / w1)``. The omitted per-quadrant offset is the
band start ``q * (w1 - 1)`` plus the band direction (descending slope for
VERT_RIGHT and HORZ_DOWN). Intercepts the stitched map cannot hold
(``>= w1`` in the non-mirrored quadrants, where those columns store
negative intercepts, or ``>= 2 * w1`` anywhere) are out of range and read
as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fht import HoughImage, Quadrant, band_row, hough_shape, is_power_of_two, side_from_hough_shape

OUT_OF_RANGE = -1


def round_half_away(x):
    """Round to nearest integer, ties away from zero (works on arrays)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def max_radius(w1: int) -> int:
    """Largest integer radius in a ``w1 x w1`` image, ``floor(w1 * sqrt(2))``."""
    return math.isqrt(2 * w1 * w1)


def radon_width(w1: int, scale_x: float) -> int:
    if w1 < 2:
        raise ValueError(f"w1 must be >= 2, got {w1}")
    if not scale_x > 0:
        raise ValueError(f"scale_x must be positive, got {scale_x}")
    return int(round_half_away(scale_x * max_radius(w1)))


@dataclass(frozen=True)
class AngleGrid:
    """``n`` normal angles from -45 degrees in steps of ``180 / n``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"angle count must be a positive integer, got {self.n}")

    @property
    def degrees(self) -> np.ndarray:
        return -45.0 + np.arange(self.n) * (180.0 / self.n)

    @property
    def angles(self) -> np.ndarray:
        return np.deg2rad(self.degrees)

    @property
    def quadrants(self) -> np.ndarray:
        # exact integer classification, boundary angles go to the higher quadrant
        return (4 * np.arange(self.n)) // self.n

    def nearest_index(self, phi_deg: float) -> int:
        """Index of the grid angle closest to ``phi_deg`` (wrapped into [-45, 135))."""
        phi = (phi_deg + 45.0) % 180.0 - 45.0
        step = 180.0 / self.n
        j = int(round_half_away((phi + 45.0) / step))
        return j % self.n


def quadrant_of(phi_deg: float) -> Quadrant:
    if not -45.0 <= phi_deg < 135.0:
        raise ValueError(f"phi must lie in [-45, 135) degrees, got {phi_deg}")
    return Quadrant(min(3, int(math.floor((phi_deg + 45.0) / 45.0))))


def map_radon_to_hough(rho: float, phi: float, w1: int, scale_x: float = 1.0):
    """Continuous ``(s, t, quadrant)`` for the line at ``(rho, phi)``.

    ``phi`` is in degrees. ``rho`` is in output-column units; pass
    ``scale_x=1`` for a physical radius.
    """
    q = quadrant_of(phi)
    s, t = _map_arrays(np.asarray(rho, dtype=np.float64), np.deg2rad(phi), int(q), w1, scale_x)
    return float(s), float(t), q


def _map_arrays(rho, phi_rad, q, w1, scale_x):
    q = np.asarray(q)
    sin, cos = np.sin(phi_rad), np.cos(phi_rad)
    vertical = q < 2
    # tan for vertical families, -1/tan for horizontal ones (via cos/sin, no poles)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(vertical, -w1 * np.tan(-phi_rad), -w1 * cos / np.where(vertical, 1.0, sin))
    s = rho / (scale_x * w1) * np.sqrt(t * t + w1 * w1)
    return s, t


def hough_cell_of(s, t, q, w1: int):
    """Stitched ``(row, col)`` of the nearest FHT cell, or ``None`` if out of range."""
    row, col = _cells(np.asarray(s, float), np.asarray(t, float), np.asarray(q), w1)
    if row < 0:
        return None
    return int(row), int(col)


def _cells(s, t, q, w1):
    slope = round_half_away(np.abs(t) * (w1 - 1) / w1).astype(np.int64)
    col = round_half_away(s).astype(np.int64)
    row = np.zeros(np.broadcast(s, t, q).shape, dtype=np.int64)
    for quad in Quadrant:
        sel = q == int(quad)
        row = np.where(sel, band_row(quad, slope, w1), row)
    limit = np.where((q == Quadrant.VERT_LEFT) | (q == Quadrant.HORZ_DOWN), 2 * w1, w1)
    ok = (col >= 0) & (col < limit) & (slope >= 0) & (slope < w1)
    row = np.where(ok, row, OUT_OF_RANGE)
    col = np.where(ok, col, OUT_OF_RANGE)
    return row, col


@dataclass(frozen=True)
class RadonHoughMap:
    """Gather table: flat stitched-Hough index per Radon cell, or ``OUT_OF_RANGE``."""

    w1: int
    n: int
    scale_x: float
    index: np.ndarray  # (n, width) int64

    @property
    def shape(self) -> tuple[int, int]:
        return self.index.shape

    @property
    def hough_shape(self) -> tuple[int, int]:
        return hough_shape(self.w1)

    def cell(self, i: int, j: int):
        """Hough ``(row, col)`` for Radon column ``i``, angle row ``j``."""
        k = int(self.index[j, i])
        if k == OUT_OF_RANGE:
            return None
        return divmod(k, 2 * self.w1)

    def scatter_matrix(self) -> sp.csr_matrix:
        """Sparse ``(hough cells, radon cells)`` matrix of the scatter (RHT)."""
        return _scatter_matrix(self.w1, self.n, self.scale_x)


def _validate(w1: int, n: int, scale_x: float) -> None:
    if not is_power_of_two(w1) or w1 < 2:
        raise ValueError(f"w1 must be a power of two >= 2, got {w1}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not scale_x > 0:
        raise ValueError(f"scale_x must be positive, got {scale_x}")


@lru_cache(maxsize=64)
def _build_index(w1: int, n: int, scale_x: float) -> np.ndarray:
    grid = AngleGrid(n)
    width = radon_width(w1, scale_x)
    rho = np.arange(width, dtype=np.float64)[None, :]
    phi = grid.angles[:, None]
    q = grid.quadrants[:, None]
    s, t = _map_arrays(rho, phi, q, w1, scale_x)
    row, col = _cells(s, t, q, w1)
    index = np.where(row >= 0, row * (2 * w1) + col, OUT_OF_RANGE)
    index.setflags(write=False)
    return index


def build_map(w1: int, n: int, scale_x: float) -> RadonHoughMap:
    _validate(w1, n, scale_x)
    return RadonHoughMap(int(w1), int(n), float(scale_x), _build_index(int(w1), int(n), float(scale_x)))


@lru_cache(maxsize=64)
def _scatter_matrix(w1: int, n: int, scale_x: float) -> sp.csr_matrix:
    index = _build_index(w1, n, scale_x).ravel()
    valid = np.flatnonzero(index != OUT_OF_RANGE)
    rows, cols = hough_shape(w1)
    data = np.ones(valid.size)
    return sp.csr_matrix((data, (index[valid], valid)), shape=(rows * cols, index.size))


# ----------------------------------------------------------------- transforms


@dataclass(frozen=True)
class RadonImage:
    """Uniform (rho, phi) map: ``n`` angle rows by ``radon_width`` radius columns."""

    grid: np.ndarray
    w1: int
    scale_x: float

    def __post_init__(self):
        width = radon_width(self.w1, self.scale_x)
        if self.grid.shape[-1] != width:
            raise ValueError(f"grid width {self.grid.shape[-1]} != radon_width({self.w1}, {self.scale_x}) = {width}")

    @property
    def n(self) -> int:
        return self.grid.shape[-2]

    @property
    def width(self) -> int:
        return self.grid.shape[-1]

    @property
    def angle_grid(self) -> AngleGrid:
        return AngleGrid(self.n)

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.width) / self.scale_x

    def __array__(self, dtype=None, copy=None):
        return self.grid if dtype is None else self.grid.astype(dtype)


def hrt_array(hough, n: int, scale_x: float) -> np.ndarray:
    """Gather on the last two axes: (..., 4h-3, 2h) -> (..., n, width)."""
    x = np.asarray(hough)
    w1 = side_from_hough_shape(*x.shape[-2:])
    table = build_map(w1, n, scale_x).index
    flat = x.reshape(x.shape[:-2] + (-1,))
    valid = table != OUT_OF_RANGE
    out = flat[..., np.where(valid, table, 0)]
    return np.where(valid, out, np.zeros((), dtype=out.dtype))


def rht_array(radon, w1: int, scale_x: float) -> np.ndarray:
    """Adjoint scatter-add: (..., n, width) -> (..., 4w1-3, 2w1)."""
    y = np.asarray(radon)
    n, width = y.shape[-2:]
    _validate(w1, n, scale_x)
    if width != radon_width(w1, scale_x):
        raise ValueError(f"radon width {width} != radon_width({w1}, {scale_x})")
    lead = y.shape[:-2]
    m = _scatter_matrix(int(w1), int(n), float(scale_x))
    cols = y.reshape(-1, n * width).T
    out = np.asarray(m @ cols, dtype=np.result_type(y.dtype, np.float32)).T
    return out.reshape(lead + hough_shape(w1))


def hrt(hough, n: int, scale_x: float) -> RadonImage:
    """HoughToRadon transform of a single stitched Hough map."""
    grid = hough.grid if isinstance(hough, HoughImage) else np.asarray(hough)
    if grid.ndim != 2:
        raise ValueError(f"hrt expects a single 2-D Hough map, got shape {grid.shape}")
    w1 = side_from_hough_shape(*grid.shape)
    return RadonImage(hrt_array(grid, n, scale_x), w1, float(scale_x))


def rht(radon, w1: int | None = None, scale_x: float | None = None) -> HoughImage:
    """RadonToHough transform, the exact adjoint of :func:`hrt`."""
    if isinstance(radon, RadonImage):
        if w1 is not None and w1 != radon.w1:
            raise ValueError(f"w1={w1} does not match the Radon image's w1={radon.w1}")
        w1, scale_x, grid = radon.w1, radon.scale_x, radon.grid
    else:
        if w1 is None or scale_x is None:
            raise ValueError("w1 and scale_x are required for a bare array")
        grid = np.asarray(radon)
    if grid.ndim != 2:
        raise ValueError(f"rht expects a single 2-D Radon map, got shape {grid.shape}")
    return HoughImage(rht_array(grid, w1, scale_x), int(w1))


def hrt_featuremap(fm, n: int, scale_x: float) -> np.ndarray:
    arr = np.asarray(fm)
    if arr.ndim != 3:
        raise ValueError(f"feature map must be (C, H, W), got {arr.shape}")
    return hrt_array(arr, n, scale_x)


def rht_featuremap(fm, w1: int, scale_x: float) -> np.ndarray:
    arr = np.asarray(fm)
    if arr.ndim != 3:
        raise ValueError(f"feature map must be (C, H, W), got {arr.shape}")
    return rht_array(arr, w1, scale_x)
