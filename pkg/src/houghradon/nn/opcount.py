"""Operation counts of the inner (Radon-space) convolutions.

The published tables quote, per (n, scaleX) cell, the multiply count of a
single 16 -> 16 channel 3x3 convolution over the inner ``width x height``
map, in units of 10^7: ``16 * 16 * 3 * 3 * width * height``. It is one
layer, not the four layers 7-10; only the single-layer count reproduces
the tables.
"""

from __future__ import annotations

from ..radon import radon_width

INNER_CHANNELS = 16
OPS_PER_CELL = INNER_CHANNELS * INNER_CHANNELS * 3 * 3  # 2304
OPS_UNIT = 10**7

PUBLISHED_N_GRID = (61, 93, 125, 157, 189, 221, 253, 285, 317, 349)
PUBLISHED_SCALEX_GRID = (0.178, 0.356, 0.533, 0.711, 0.889, 1.067, 1.244, 1.422, 1.6, 1.778)
PUBLISHED_W1 = 64


def inner_ops_count(width: int, height: int) -> int:
    if width < 1 or height < 1:
        raise ValueError(f"dimensions must be positive, got {width}x{height}")
    return OPS_PER_CELL * width * height


def format_ops(ops: int) -> str:
    """Units of 10^7: one decimal below 10, whole numbers from 10 up (half away from zero)."""
    value = ops / OPS_UNIT
    tenths = int(value * 10 + 0.5)
    if tenths >= 100:
        return str(int(value + 0.5))
    return f"{tenths / 10:.1f}"


def format_size(width: int, height: int) -> str:
    return f"[{width}; {height}]"


def ops_grid(w1: int = PUBLISHED_W1, n_list=PUBLISHED_N_GRID, scalex_list=PUBLISHED_SCALEX_GRID):
    """``[(n, scale_x, width, height, ops), ...]`` in row-major (n, scale_x) order."""
    rows = []
    for n in n_list:
        for sx in scalex_list:
            width = radon_width(w1, sx)
            rows.append((n, sx, width, n, inner_ops_count(width, n)))
    return rows


def ops_table(w1: int = PUBLISHED_W1, n_list=PUBLISHED_N_GRID, scalex_list=PUBLISHED_SCALEX_GRID) -> str:
    """Plain-text grid: one row per n, one cell ``[w; h] ops`` per scaleX."""
    cells = {(n, sx): (w, h, ops) for n, sx, w, h, ops in ops_grid(w1, n_list, scalex_list)}
    header = ["n \\ scaleX"] + [f"{sx:g}" for sx in scalex_list]
    lines = ["\t".join(header)]
    for n in n_list:
        row = [str(n)]
        for sx in scalex_list:
            w, h, ops = cells[(n, sx)]
            row.append(f"{format_size(w, h)} {format_ops(ops)}")
        lines.append("\t".join(row))
    return "\n".join(lines)
