"""Train the 64x64 network on synthetic documents and look at the masks.

Run: python demos/04_train_synthetic.py [epochs] [outdir]
Takes about five seconds per epoch on one core.
"""

import logging
import sys
from pathlib import Path

import numpy as np

from houghradon.data import synth_splits
from houghradon.image import write_pgm
from houghradon.metrics import labels_from_probs, miou
from houghradon.nn.network import NetworkSpec, build_network, save_checkpoint
from houghradon.nn.training import train, write_log

logging.basicConfig(level=logging.INFO, format="%(message)s")
epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 10
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_out")
out.mkdir(exist_ok=True)

data = synth_splits(200, 50, size=64, seed=0)
spec = NetworkSpec(input_size=64, n=61, scale_x=1.0)
print(f"input 64x64, Hough map {spec.hough_map_shape}, inner maps {spec.inner_shape}")
net = build_network(spec, seed=0, dtype=np.float32)
print(f"{net.parameter_count} trainable parameters")

history = train(net, data, epochs)
write_log(history, out / "log.csv")
save_checkpoint(net, out / "checkpoint")

test = [s for s in data if s.split == "test"][:4]
labels = labels_from_probs(net.predict(np.stack([s.image for s in test])))
for k, (s, pred) in enumerate(zip(test, labels)):
    write_pgm(np.hstack([s.image, s.mask, pred]), out / f"sample{k}.pgm")
    print(f"sample {k}: MIoU {miou(pred, s.mask):.3f}  (image | truth | prediction in sample{k}.pgm)")
