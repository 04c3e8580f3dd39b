"""Dyadic patterns, the fast/naive FHT agreement, and the stitched map.

Run: python demos/01_fast_hough.py [outdir]
Writes line.pgm and hough.pgm (contrast-stretched) to outdir.
"""

import sys
from pathlib import Path

import numpy as np

from houghradon.fht import Quadrant, dyadic_pattern, fht_full, fht_quadrant, naive_fht_quadrant
from houghradon.image import write_pgm

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

# A dyadic line of slope t drifts t columns over h rows in unit steps.
print("patterns for h = 8")
for t in range(8):
    print(f"  t={t}: {dyadic_pattern(8, t)}")

# The butterfly sums exactly the same pixels as the direct sum.
rng = np.random.default_rng(0)
img = rng.integers(0, 256, size=(32, 32))
same = all(np.array_equal(fht_quadrant(img, q), naive_fht_quadrant(img, q)) for q in Quadrant)
print(f"fast == naive on a random 32x32 byte image: {same}")

# One bright line gives one bright cell in the stitched map.
h = 64
y, x = np.mgrid[0:h, 0:h]
line = (np.abs(x - 0.4 * y - 10) < 0.5).astype(float)
hough = fht_full(line)
row, col = np.unravel_index(hough.grid.argmax(), hough.shape)
print(f"stitched map {hough.shape[1]}x{hough.shape[0]} (width x height); peak {hough.grid.max():.0f} at row {row}, column {col}")
for q in Quadrant:
    lo, hi = q.angle_range
    print(f"  {q.name:10s} rows {q * (h - 1):3d}..{q * (h - 1) + h - 1:3d}  normal angles [{lo:.0f}, {hi:.0f})")

write_pgm(line, out / "line.pgm")
write_pgm(hough.grid / hough.grid.max(), out / "hough.pgm")
print(f"wrote {out / 'line.pgm'} and {out / 'hough.pgm'}")
