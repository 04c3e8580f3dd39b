"""From the (s, t) Hough map to a uniform (rho, phi) Radon map.

Draws a few lines at known (rho, phi), runs FHT then HRT and reports where
the peak lands against the analytic cell. Also shows how n and scaleX set
the Radon map size.
"""

import math

import numpy as np

from houghradon.fht import fht_full
from houghradon.radon import AngleGrid, build_map, hrt, radon_width

h, n, scale_x = 64, 253, 1.0
grid = AngleGrid(n)
yy, xx = np.mgrid[0:h, 0:h].astype(float)

print(f"{'phi':>7} {'rho':>6}   expected (row, col)   found")
for phi, rho in [(-30.0, 20.0), (10.0, 40.0), (60.0, 50.0), (100.0, 15.0), (130.0, 5.0)]:
    d = xx * math.cos(math.radians(phi)) + yy * math.sin(math.radians(phi)) - rho
    img = np.clip(1 - np.abs(d), 0, None)
    radon = hrt(fht_full(img), n, scale_x).grid
    found = np.unravel_index(radon.argmax(), radon.shape)
    expected = (grid.nearest_index(phi), round(rho * scale_x))
    print(f"{phi:7.1f} {rho:6.1f}   {str(expected):>19}   {tuple(int(v) for v in found)}")

print("\nRadon map sizes [width; height] for w1 = 64")
for n_, sx in [(61, 0.178), (253, 0.711), (253, 1.422), (349, 1.778)]:
    print(f"  n={n_:3d} scaleX={sx:5.3f} -> [{radon_width(64, sx)}; {n_}]")

m = build_map(64, 253, 0.711)
used = np.count_nonzero(m.index >= 0)
print(f"\nlookup table 253x64: {used} of {m.index.size} cells read a Hough value, the rest fall outside and read 0")
