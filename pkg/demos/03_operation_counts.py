"""How much the inner convolutions cost for each (n, scaleX).

One 16->16 channel 3x3 convolution over a W x H map costs 2304 * W * H
multiplications. Without HRT the inner maps are the 128 x 253 stitched
Hough maps.
"""

from houghradon.nn.opcount import inner_ops_count, ops_table

print(ops_table())

baseline = inner_ops_count(128, 253)
for n, w in [(253, 64), (61, 16), (93, 32)]:
    ops = inner_ops_count(w, n)
    print(f"[{w}; {n}]: {ops / 1e7:.2f}e7 ops, {100 * (1 - ops / baseline):.0f}% fewer than [128; 253]")
