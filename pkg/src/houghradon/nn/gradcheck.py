"""Central finite-difference checks of every backward pass (float64)."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from ..radon import radon_width
from .network import FHTLayer, HRTLayer, NetworkSpec, RHTLayer, TFHTLayer, build_network
from .ops import (
    ConvParams,
    ConvSpec,
    conv2d_backward,
    conv2d_forward,
    cross_entropy_loss,
    softmax_backward,
    softmax_channels,
    softsign,
    softsign_backward,
)

STEP = 1e-5
BLOCK_TOL = 1e-4
END_TO_END_TOL = 1e-3


class CheckResult(NamedTuple):
    block: str
    rel_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.rel_error < self.tol


def relative_error(a, b) -> float:
    a = np.ravel(a)
    b = np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def numerical_gradient(f: Callable[[], float], x: np.ndarray, step: float = STEP) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. ``x``, perturbed in place."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        up = f()
        flat[i] = old - step
        down = f()
        flat[i] = old
        gflat[i] = (up - down) / (2 * step)
    return grad


def _check_conv(rng, upscale):
    spec = ConvSpec(3, 2, upscale=upscale)
    x = rng.normal(size=(2, 3, 5, 4))
    params = ConvParams(rng.normal(size=spec.weight_shape), rng.normal(size=2))
    out_shape = conv2d_forward(x, spec, params).shape
    r = rng.normal(size=out_shape)

    def f():
        return float((conv2d_forward(x, spec, params) * r).sum())

    gx, gp = conv2d_backward(r, x, spec, params)
    analytic = np.concatenate([gx.ravel(), gp.weight.ravel(), gp.bias.ravel()])
    numeric = np.concatenate(
        [numerical_gradient(f, x).ravel(), numerical_gradient(f, params.weight).ravel(), numerical_gradient(f, params.bias).ravel()]
    )
    return relative_error(analytic, numeric)


def _check_softsign(rng):
    x = rng.normal(size=(3, 4, 4)) * 2
    r = rng.normal(size=x.shape)
    return relative_error(softsign_backward(r, x), numerical_gradient(lambda: float((softsign(x) * r).sum()), x))


def _check_softmax(rng):
    x = rng.normal(size=(2, 3, 4, 4))
    r = rng.normal(size=x.shape)
    analytic = softmax_backward(r, softmax_channels(x))
    return relative_error(analytic, numerical_gradient(lambda: float((softmax_channels(x) * r).sum()), x))


def _check_loss(rng):
    z = rng.normal(size=(2, 2, 5, 5))
    mask = rng.integers(0, 2, size=(2, 5, 5))
    _, analytic = cross_entropy_loss(softmax_channels(z), mask)
    return relative_error(analytic, numerical_gradient(lambda: cross_entropy_loss(softmax_channels(z), mask)[0], z))


def _chain_check(rng, layers, in_shape):
    x = rng.normal(size=in_shape)

    def run(v):
        for layer in layers:
            v = layer.forward(v)
        return v

    r = rng.normal(size=run(x).shape)
    g = r
    for layer in reversed(layers):
        g = layer.backward(g)
    return relative_error(g, numerical_gradient(lambda: float((run(x) * r).sum()), x))


def _check_end_to_end(rng, size, corrupt):
    spec = NetworkSpec.reduced(size)
    net = build_network(spec, seed=int(rng.integers(1 << 31)))
    if corrupt:
        net.layer("rht").corrupt = True
    # biases start at zero; randomise them so every path is exercised
    for name, p in net.parameters().items():
        if name.endswith(".bias"):
            p[...] = rng.normal(scale=0.3, size=p.shape)
    x = rng.uniform(0, 1, size=(1, 1, size, size))
    mask = rng.integers(0, 2, size=(1, size, size))

    def f():
        return cross_entropy_loss(net.forward(x), mask)[0]

    _, grad = cross_entropy_loss(net.forward(x), mask)
    gx = net.backward(grad, from_logits=True)
    analytic = [gx.ravel()] + [g.ravel() for g in net.gradients().values()]
    numeric = [numerical_gradient(f, x).ravel()] + [numerical_gradient(f, p).ravel() for p in net.parameters().values()]
    return relative_error(np.concatenate(analytic), np.concatenate(numeric))


def run_gradchecks(size: int = 16, seed: int = 0, corrupt_adjoint: bool = False) -> list[CheckResult]:
    """Per-block and end-to-end checks on the reduced network at ``size``."""
    rng = np.random.default_rng(seed)
    side = size >> 2
    n = 4 * side - 3
    width = radon_width(side, 1.0)
    rht_layer = RHTLayer(side, n, 1.0)
    rht_layer.corrupt = corrupt_adjoint

    results = [
        CheckResult("conv", _check_conv(rng, 1), BLOCK_TOL),
        CheckResult("conv_upscale", _check_conv(rng, 2), BLOCK_TOL),
        CheckResult("softsign", _check_softsign(rng), BLOCK_TOL),
        CheckResult("softmax", _check_softmax(rng), BLOCK_TOL),
        CheckResult("loss", _check_loss(rng), BLOCK_TOL),
        CheckResult("fht_hrt", _chain_check(rng, [FHTLayer(1.0 / side), HRTLayer(side, n, 1.0)], (2, side, side)), BLOCK_TOL),
        CheckResult("rht_tfht", _chain_check(rng, [rht_layer, TFHTLayer(1.0 / side)], (2, n, width)), BLOCK_TOL),
        CheckResult("end_to_end", _check_end_to_end(rng, size, corrupt_adjoint), END_TO_END_TOL),
    ]
    return results
