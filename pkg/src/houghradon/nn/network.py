"""The HoughEncoder-style autoencoder with HRT/RHT inner layers.

Layer list (channel counts before ``width_divisor``)::

     1 conv  4   softsign        9 conv 16  softsign
     2 conv  8   softsign       10 conv 16  softsign
       avgpool 2x2              11 RHT
     3 conv 16   softsign       12 TFHT
     4 conv 16   softsign       13 conv  8  upscale 2, softsign
       avgpool 2x2              14 conv  4  upscale 2, softsign
     5 FHT                      15 conv  4  softsign
     6 HRT                      16 conv  2  softmax
     7 conv 16   softsign
     8 conv 16   softsign

The two pooling steps bring a 256x256 input down to 64x64 before the FHT,
giving the 253x128 Hough map that the two upscaling convolutions undo.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..fht import fht_array, hough_shape, is_power_of_two, tfht_array
from ..image import FormatError, read_tensor, write_tensor
from ..radon import hrt_array, radon_width, rht_array
from .ops import (
    ConvParams,
    ConvSpec,
    avgpool2,
    avgpool2_backward,
    conv3x3,
    conv3x3_backward,
    softmax_channels,
    softmax_backward,
    softsign,
    softsign_backward,
    upsample2,
    upsample2_backward,
)


class TableRow(NamedTuple):
    index: int
    kind: str
    filters: int = 0
    upscale: int = 1
    activation: str = "none"


TABLE1 = (
    TableRow(1, "conv", 4, 1, "softsign"),
    TableRow(2, "conv", 8, 1, "softsign"),
    TableRow(3, "conv", 16, 1, "softsign"),
    TableRow(4, "conv", 16, 1, "softsign"),
    TableRow(5, "fht"),
    TableRow(6, "hrt"),
    TableRow(7, "conv", 16, 1, "softsign"),
    TableRow(8, "conv", 16, 1, "softsign"),
    TableRow(9, "conv", 16, 1, "softsign"),
    TableRow(10, "conv", 16, 1, "softsign"),
    TableRow(11, "rht"),
    TableRow(12, "tfht"),
    TableRow(13, "conv", 8, 2, "softsign"),
    TableRow(14, "conv", 4, 2, "softsign"),
    TableRow(15, "conv", 4, 1, "softsign"),
    TableRow(16, "conv", 2, 1, "softmax"),
)

INNER_LAYERS = (7, 8, 9, 10)


@dataclass(frozen=True)
class NetworkSpec:
    input_size: int = 256
    n: int = 253
    scale_x: float = 0.711
    width_divisor: int = 1
    pool_after: tuple[int, ...] = (2, 4)
    normalize_transforms: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.scale_x > 0:
            raise ValueError(f"scale_x must be positive, got {self.scale_x}")
        if self.width_divisor < 1:
            raise ValueError("width_divisor must be >= 1")
        if not is_power_of_two(self.input_size):
            raise ValueError(f"input size must be a power of two, got {self.input_size}")
        if self.hough_side < 2:
            raise ValueError(f"input size {self.input_size} is too small for {len(self.pool_after)} poolings")

    @property
    def hough_side(self) -> int:
        """Side of the feature maps entering the FHT."""
        return self.input_size >> len(self.pool_after)

    def channels(self, row: TableRow) -> int:
        if row.index == 16:
            return row.filters
        return max(1, row.filters // self.width_divisor)

    @property
    def inner_shape(self) -> tuple[int, int, int]:
        """(channels, rows, cols) of the feature maps seen by layers 7-10."""
        return self.channels(TABLE1[6]), self.n, radon_width(self.hough_side, self.scale_x)

    @property
    def hough_map_shape(self) -> tuple[int, int]:
        return hough_shape(self.hough_side)

    def conv_specs(self) -> dict[int, ConvSpec]:
        specs = {}
        channels = 1
        for row in TABLE1:
            if row.kind != "conv":
                continue
            out = self.channels(row)
            specs[row.index] = ConvSpec(channels, out, row.upscale, row.activation)
            channels = out
        return specs

    @classmethod
    def reduced(cls, input_size: int = 16, n: int | None = None, scale_x: float = 1.0, width_divisor: int = 4):
        """Desk-scale variant: small input, quartered channel widths."""
        side = input_size >> 2
        return cls(input_size, 4 * side - 3 if n is None else n, scale_x, width_divisor)


# --------------------------------------------------------------------- layers


class Layer:
    name = ""

    def parameters(self) -> dict[str, np.ndarray]:
        return {}

    def gradients(self) -> dict[str, np.ndarray]:
        return {}


class ConvLayer(Layer):
    def __init__(self, index: int, spec: ConvSpec, params: ConvParams):
        self.index = index
        self.name = f"conv{index}"
        self.spec = spec
        self.params = params
        self.grads = ConvParams(np.zeros_like(params.weight), np.zeros_like(params.bias))
        self._cache = None

    def forward(self, x):
        up = upsample2(x) if self.spec.upscale == 2 else x
        pre = conv3x3(up, self.params.weight, self.params.bias)
        if self.spec.activation == "softsign":
            out = softsign(pre)
        elif self.spec.activation == "softmax":
            out = softmax_channels(pre)
        else:
            out = pre
        self._cache = (up, pre, out)
        return out

    def backward(self, grad, through_activation: bool = True):
        up, pre, out = self._cache
        if through_activation:
            if self.spec.activation == "softsign":
                grad = softsign_backward(grad, pre)
            elif self.spec.activation == "softmax":
                grad = softmax_backward(grad, out)
        gx, gw, gb = conv3x3_backward(grad, up, self.params.weight)
        self.grads = ConvParams(gw, gb)
        return upsample2_backward(gx) if self.spec.upscale == 2 else gx

    def parameters(self):
        return {f"{self.name}.weight": self.params.weight, f"{self.name}.bias": self.params.bias}

    def gradients(self):
        return {f"{self.name}.weight": self.grads.weight, f"{self.name}.bias": self.grads.bias}


class AvgPoolLayer(Layer):
    def __init__(self, after: int):
        self.name = f"pool{after}"

    def forward(self, x):
        return avgpool2(x)

    def backward(self, grad):
        return avgpool2_backward(grad)


class FHTLayer(Layer):
    """Fixed linear layer; ``scale`` keeps activations O(1) (1/h by default)."""

    name = "fht"

    def __init__(self, scale: float = 1.0):
        self.scale = scale

    def forward(self, x):
        return fht_array(x) * self.scale

    def backward(self, grad):
        return tfht_array(grad) * self.scale


class TFHTLayer(Layer):
    name = "tfht"

    def __init__(self, scale: float = 1.0):
        self.scale = scale

    def forward(self, x):
        return tfht_array(x) * self.scale

    def backward(self, grad):
        return fht_array(grad) * self.scale


class HRTLayer(Layer):
    name = "hrt"

    def __init__(self, w1: int, n: int, scale_x: float):
        self.w1, self.n, self.scale_x = w1, n, scale_x

    def forward(self, x):
        return hrt_array(x, self.n, self.scale_x)

    def backward(self, grad):
        return rht_array(grad, self.w1, self.scale_x)


class RHTLayer(Layer):
    name = "rht"

    def __init__(self, w1: int, n: int, scale_x: float):
        self.w1, self.n, self.scale_x = w1, n, scale_x
        self.corrupt = False

    def forward(self, x):
        return rht_array(x, self.w1, self.scale_x)

    def backward(self, grad):
        g = hrt_array(grad, self.n, self.scale_x)
        if self.corrupt:
            # negative control for gradient checks
            g = np.roll(g, 1, axis=-1)
        return g


# -------------------------------------------------------------------- network


def glorot_uniform(rng: np.random.Generator, spec: ConvSpec) -> ConvParams:
    fan_in = spec.in_channels * 9
    fan_out = spec.out_channels * 9
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    weight = rng.uniform(-limit, limit, size=spec.weight_shape)
    return ConvParams(weight, np.zeros(spec.out_channels))


@dataclass
class Network:
    spec: NetworkSpec
    layers: list = field(repr=False)
    dtype: type = np.float64

    def forward(self, x):
        """Class probabilities ``(N, 2, S, S)`` for input ``(N, 1, S, S)``."""
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        s = self.spec.input_size
        if x.shape[1:] != (1, s, s):
            raise ValueError(f"expected input (N, 1, {s}, {s}), got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x)
        return x[0] if squeeze else x

    def backward(self, grad, *, from_logits: bool = False):
        """Backpropagate; returns the gradient w.r.t. the network input.

        ``from_logits=True`` means ``grad`` is taken w.r.t. the pre-softmax
        output of layer 16 (what :func:`cross_entropy_loss` returns).
        """
        g = np.asarray(grad, dtype=self.dtype)
        squeeze = g.ndim == 3
        if squeeze:
            g = g[None]
        last = self.layers[-1]
        g = last.backward(g, through_activation=not from_logits)
        for layer in reversed(self.layers[:-1]):
            g = layer.backward(g)
        return g[0] if squeeze else g

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            out.update(layer.parameters())
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            out.update(layer.gradients())
        return out

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        for layer in self.conv_layers():
            w = np.asarray(values[f"{layer.name}.weight"], dtype=self.dtype)
            b = np.asarray(values[f"{layer.name}.bias"], dtype=self.dtype)
            if w.shape != layer.spec.weight_shape or b.shape != (layer.spec.out_channels,):
                raise ValueError(f"parameter shape mismatch for {layer.name}")
            layer.params = ConvParams(w, b)

    def conv_layers(self) -> list[ConvLayer]:
        return [layer for layer in self.layers if isinstance(layer, ConvLayer)]

    def layer(self, name: str) -> Layer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    @property
    def parameter_count(self) -> int:
        return sum(v.size for v in self.parameters().values())

    def astype(self, dtype) -> "Network":
        self.dtype = dtype
        self.set_parameters({k: v.astype(dtype) for k, v in self.parameters().items()})
        return self

    def predict(self, images) -> np.ndarray:
        """Class probabilities for a stack of raw ``(N, S, S)`` images.

        Each image is standardised to zero mean and unit variance first;
        without that the all-background solution is a deep plateau.
        """
        x = standardize(np.asarray(images, dtype=self.dtype))[:, None]
        return self.forward(x)


def standardize(images: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Per-image zero mean, unit variance over the last two axes."""
    mean = images.mean(axis=(-2, -1), keepdims=True)
    std = images.std(axis=(-2, -1), keepdims=True)
    return (images - mean) / np.maximum(std, eps)


def build_network(spec: NetworkSpec, seed: int = 0, dtype=np.float64) -> Network:
    rng = np.random.default_rng(seed)
    convs = spec.conv_specs()
    side = spec.hough_side
    scale = 1.0 / side if spec.normalize_transforms else 1.0
    layers: list[Layer] = []
    for row in TABLE1:
        if row.kind == "conv":
            cs = convs[row.index]
            layers.append(ConvLayer(row.index, cs, glorot_uniform(rng, cs)))
            if row.index in spec.pool_after:
                layers.append(AvgPoolLayer(row.index))
        elif row.kind == "fht":
            layers.append(FHTLayer(scale))
        elif row.kind == "hrt":
            layers.append(HRTLayer(side, spec.n, spec.scale_x))
        elif row.kind == "rht":
            layers.append(RHTLayer(side, spec.n, spec.scale_x))
        elif row.kind == "tfht":
            layers.append(TFHTLayer(scale))
    net = Network(spec, layers)
    return net.astype(dtype)


# ----------------------------------------------------------------- checkpoint

MANIFEST = "manifest.txt"
_MANIFEST_HEADER = "houghradon-checkpoint 1"


def save_checkpoint(net: Network, directory) -> Path:
    """One ``HRT1`` tensor per parameter plus a text manifest.

    Weights ``(out, in, 3, 3)`` are stored as ``(out*in, 3, 3)``, biases as
    ``(1, 1, out)``; the manifest records the true shapes in layer order.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    spec = asdict(net.spec)
    spec["pool_after"] = ",".join(str(i) for i in net.spec.pool_after)
    lines = [_MANIFEST_HEADER, "spec " + " ".join(f"{k}={v}" for k, v in spec.items())]
    for name, value in net.parameters().items():
        fname = f"{name}.hrt1"
        flat = value.reshape(-1, 3, 3) if value.ndim == 4 else value.reshape(1, 1, -1)
        write_tensor(flat.astype(np.float32), d / fname)
        lines.append(f"param {name} {'x'.join(map(str, value.shape))} {fname}")
    (d / MANIFEST).write_text("\n".join(lines) + "\n")
    return d


def _parse_spec(text: str) -> NetworkSpec:
    kv = dict(item.split("=", 1) for item in text.split())
    return NetworkSpec(
        input_size=int(kv["input_size"]),
        n=int(kv["n"]),
        scale_x=float(kv["scale_x"]),
        width_divisor=int(kv["width_divisor"]),
        pool_after=tuple(int(i) for i in kv["pool_after"].split(",") if i),
        normalize_transforms=kv["normalize_transforms"] == "True",
    )


def load_checkpoint(directory, dtype=np.float32) -> Network:
    d = Path(directory)
    path = d / MANIFEST
    if not path.is_file():
        raise FileNotFoundError(f"no checkpoint manifest at {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != _MANIFEST_HEADER:
        raise FormatError(f"{path}: not a checkpoint manifest")
    spec = None
    values = {}
    for line in lines[1:]:
        if line.startswith("spec "):
            spec = _parse_spec(line[5:])
        elif line.startswith("param "):
            _, name, shape, fname = line.split()
            dims = tuple(int(s) for s in shape.split("x"))
            values[name] = read_tensor(d / fname).reshape(dims)
    if spec is None:
        raise FormatError(f"{path}: missing spec line")
    net = build_network(spec, seed=0, dtype=dtype)
    net.set_parameters(values)
    return net
