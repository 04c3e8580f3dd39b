"""Forward/backward kernels for the autoencoder.

All kernels take batched arrays ``(N, C, H, W)``; a bare ``(C, H, W)``
feature map is treated as a batch of one and returned without the batch
axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ACTIVATIONS = ("softsign", "softmax", "none")
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ConvSpec:
    """3x3 convolution, stride 1, padding 1, optional 2x nearest upsampling first."""

    in_channels: int
    out_channels: int
    upscale: int = 1
    activation: str = "softsign"

    kernel = 3
    stride = 1
    padding = 1

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")
        if self.upscale not in (1, 2):
            raise ValueError(f"upscale must be 1 or 2, got {self.upscale}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels, 3, 3)

    @property
    def parameter_count(self) -> int:
        return self.out_channels * self.in_channels * 9 + self.out_channels


@dataclass
class ConvParams:
    weight: np.ndarray  # (out, in, 3, 3)
    bias: np.ndarray  # (out,)


def _batched(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim != 4:
        raise ValueError(f"expected (C, H, W) or (N, C, H, W), got shape {x.shape}")
    return x, False


def _unbatch(y, squeeze: bool):
    return y[0] if squeeze else y


# ----------------------------------------------------------------- primitives


def conv3x3(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Zero-padded 3x3 cross-correlation of ``(N, C, H, W)`` input."""
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    patches = sliding_window_view(xp, (3, 3), axis=(2, 3))  # N C H W 3 3
    out = np.tensordot(patches, weight, axes=([1, 4, 5], [1, 2, 3]))  # N H W O
    out += bias
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv3x3_backward(grad: np.ndarray, x: np.ndarray, weight: np.ndarray):
    """Gradients of :func:`conv3x3` w.r.t. input, weight and bias."""
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    patches = sliding_window_view(xp, (3, 3), axis=(2, 3))
    grad_w = np.tensordot(grad, patches, axes=([0, 2, 3], [0, 2, 3]))  # O C 3 3
    grad_b = grad.sum(axis=(0, 2, 3))
    gp = np.pad(grad, ((0, 0), (0, 0), (1, 1), (1, 1)))
    gpatches = sliding_window_view(gp, (3, 3), axis=(2, 3))  # N O H W 3 3
    flipped = weight[:, :, ::-1, ::-1]
    grad_x = np.tensordot(gpatches, flipped, axes=([1, 4, 5], [0, 2, 3]))  # N H W C
    return np.ascontiguousarray(grad_x.transpose(0, 3, 1, 2)), grad_w, grad_b


def upsample2(x: np.ndarray) -> np.ndarray:
    return x.repeat(2, axis=-2).repeat(2, axis=-1)


def upsample2_backward(grad: np.ndarray) -> np.ndarray:
    *lead, h, w = grad.shape
    return grad.reshape(*lead, h // 2, 2, w // 2, 2).sum(axis=(-3, -1))


def avgpool2(x: np.ndarray) -> np.ndarray:
    *lead, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"average pooling needs even sides, got {h}x{w}")
    return x.reshape(*lead, h // 2, 2, w // 2, 2).mean(axis=(-3, -1))


def avgpool2_backward(grad: np.ndarray) -> np.ndarray:
    return upsample2(grad) * 0.25


def softsign(x):
    x = np.asarray(x)
    return x / (1 + np.abs(x))


def softsign_backward(grad, x):
    d = 1 + np.abs(np.asarray(x))
    return grad / (d * d)


def softmax_channels(x):
    """Softmax over the channel axis (-3) with max subtraction."""
    x = np.asarray(x)
    z = np.exp(x - x.max(axis=-3, keepdims=True))
    return z / z.sum(axis=-3, keepdims=True)


def softmax_backward(grad, probs):
    """Vector-Jacobian product of :func:`softmax_channels` given its output."""
    inner = (grad * probs).sum(axis=-3, keepdims=True)
    return probs * (grad - inner)


def cross_entropy_loss(probs, mask):
    """Mean pixelwise negative log-likelihood of a two-class softmax output.

    ``probs`` is ``(2, H, W)`` or ``(N, 2, H, W)``; ``mask`` holds the
    foreground indicator with matching spatial (and batch) shape. Returns the
    loss and its gradient with respect to the pre-softmax logits,
    ``(probs - onehot) / pixel_count``.
    """
    p, squeeze = _batched(probs)
    m = np.asarray(mask)
    if squeeze:
        m = m[None]
    if m.shape != (p.shape[0],) + p.shape[2:]:
        raise ValueError(f"mask shape {np.shape(mask)} does not match predictions {np.shape(probs)}")
    if not np.all((m == 0) | (m == 1)):
        raise ValueError("mask values must be 0 or 1")
    labels = m.astype(np.int64)
    onehot = np.stack([labels == c for c in range(p.shape[1])], axis=1).astype(p.dtype)
    count = labels.size
    picked = (p * onehot).sum(axis=1)
    loss = -np.log(np.maximum(picked, PROB_FLOOR)).sum() / count
    grad = (p - onehot) / count
    return float(loss), _unbatch(grad, squeeze)


# ------------------------------------------------------------- conv composite


def _activate(pre, activation):
    if activation == "softsign":
        return softsign(pre)
    if activation == "softmax":
        return softmax_channels(pre)
    return pre


def _activation_backward(grad, pre, out, activation):
    if activation == "softsign":
        return softsign_backward(grad, pre)
    if activation == "softmax":
        return softmax_backward(grad, out)
    return grad


def conv2d_forward(x, spec: ConvSpec, params: ConvParams):
    """Upscale (optional), convolve, activate."""
    xb, squeeze = _batched(x)
    if xb.shape[1] != spec.in_channels:
        raise ValueError(f"expected {spec.in_channels} input channels, got {xb.shape[1]}")
    if spec.upscale == 2:
        xb = upsample2(xb)
    pre = conv3x3(xb, params.weight, params.bias)
    return _unbatch(_activate(pre, spec.activation), squeeze)


def conv2d_backward(grad_out, x, spec: ConvSpec, params: ConvParams, *, through_activation: bool = True):
    """Return ``(grad_input, ConvParams of gradients)``.

    The forward pass is recomputed from ``x``. With
    ``through_activation=False`` the incoming gradient is taken to be with
    respect to the pre-activation output (used for softmax + cross-entropy).
    """
    xb, squeeze = _batched(x)
    g, _ = _batched(grad_out)
    if xb.shape[1] != spec.in_channels:
        raise ValueError(f"expected {spec.in_channels} input channels, got {xb.shape[1]}")
    up = upsample2(xb) if spec.upscale == 2 else xb
    if g.shape != (up.shape[0], spec.out_channels) + up.shape[2:]:
        raise ValueError(f"gradient shape {g.shape} does not match the forward output")
    if through_activation:
        pre = conv3x3(up, params.weight, params.bias)
        g = _activation_backward(g, pre, _activate(pre, spec.activation), spec.activation)
    gx, gw, gb = conv3x3_backward(g, up, params.weight)
    if spec.upscale == 2:
        gx = upsample2_backward(gx)
    return _unbatch(gx, squeeze), ConvParams(gw, gb)
