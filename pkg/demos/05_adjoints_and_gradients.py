"""The transposed layers really are transposes, and backprop is right.

Dot-product tests for FHT/TFHT and HRT/RHT, then the finite-difference
checks of every block.
"""

import numpy as np

from houghradon.fht import fht_array, hough_shape, tfht
from houghradon.nn.gradcheck import run_gradchecks
from houghradon.radon import hrt_array, radon_width, rht_array

rng = np.random.default_rng(0)
h, n, sx = 16, 61, 0.9
x = rng.normal(size=(h, h))
y = rng.normal(size=hough_shape(h))
print(f"<FHT x, y>  = {np.vdot(fht_array(x), y):.12f}")
print(f"<x, TFHT y> = {np.vdot(x, tfht(y)):.12f}")

u = rng.normal(size=hough_shape(h))
v = rng.normal(size=(n, radon_width(h, sx)))
print(f"<HRT u, v>  = {np.vdot(hrt_array(u, n, sx), v):.12f}")
print(f"<u, RHT v>  = {np.vdot(u, rht_array(v, h, sx)):.12f}")

print("\nfinite-difference checks (float64)")
for r in run_gradchecks(16):
    print(f"  {r.block:12s} {r.rel_error:.2e}  {'ok' if r.passed else 'FAILED'}")
print("\nwith a deliberately broken RHT backward")
for r in run_gradchecks(16, corrupt_adjoint=True):
    if not r.passed:
        print(f"  {r.block:12s} {r.rel_error:.2e}  caught")
