"""Reference implementations that share no code with the library."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import map_coordinates


def dyadic_shift(h: int, t: int, y: int) -> int:
    """Row ``y`` displacement of the dyadic line of slope ``t``, bit by bit.

    Unrolls the halving recursion: at each level the upper half of the
    rows gains ``ceil(t_level / 2)`` where ``t_level`` is ``t`` shifted
    down by the remaining depth.
    """
    shift = 0
    size = h
    tt = t
    levels = []
    while size > 1:
        levels.append(tt)
        tt //= 2
        size //= 2
    # levels[k] is the slope used at block height h >> k
    for k, t_k in enumerate(levels):
        half = h >> (k + 1)
        if (y // half) % 2 == 1:
            shift += t_k // 2 + t_k % 2
    return shift


def hough_sums(oriented: np.ndarray) -> np.ndarray:
    """Plain loops: ``out[t, s] = sum_y P[y, (s + D(t, y)) mod 2h]``."""
    h = oriented.shape[0]
    width = 2 * h
    padded = np.zeros((h, width), dtype=oriented.dtype)
    padded[:, :h] = oriented
    out = np.zeros((h, width), dtype=oriented.dtype)
    for t in range(h):
        shifts = [dyadic_shift(h, t, y) for y in range(h)]
        for s in range(width):
            out[t, s] = sum(padded[y, (s + shifts[y]) % width] for y in range(h))
    return out


def render_line(h: int, rho: float, phi_deg: float) -> np.ndarray:
    """Anti-aliased one-pixel line ``x cos(phi) + y sin(phi) = rho`` (pixel centres at integers)."""
    y, x = np.mgrid[0:h, 0:h].astype(float)
    phi = math.radians(phi_deg)
    d = x * math.cos(phi) + y * math.sin(phi) - rho
    return np.clip(1 - np.abs(d), 0, None)


def radon_line_integrals(img: np.ndarray, n: int, width: int, scale_x: float, step: float = 0.5) -> np.ndarray:
    """Bilinear line integrals on the ``(phi_j, rho_i = i / scale_x)`` grid."""
    h = img.shape[0]
    out = np.zeros((n, width))
    u = np.arange(-2 * h, 2 * h, step)
    rho = np.arange(width) / scale_x
    for j in range(n):
        phi = math.radians(-45 + j * 180 / n)
        c, s = math.cos(phi), math.sin(phi)
        xs = rho[:, None] * c - u[None, :] * s
        ys = rho[:, None] * s + u[None, :] * c
        vals = map_coordinates(img, [ys.ravel(), xs.ravel()], order=1, cval=0.0)
        out[j] = vals.reshape(width, -1).sum(axis=1) * step
    return out


def confusion_miou(pred, truth) -> float:
    """Two-class MIoU from a 2x2 confusion matrix (0/0 counts as 1)."""
    p = np.asarray(pred).astype(int).ravel()
    t = np.asarray(truth).astype(int).ravel()
    cm = np.bincount(2 * t + p, minlength=4).reshape(2, 2)
    scores = []
    for c in range(2):
        inter = cm[c, c]
        union = cm[c, :].sum() + cm[:, c].sum() - inter
        scores.append(1.0 if union == 0 else inter / union)
    return float(np.mean(scores))


def directional_fd(f, x: np.ndarray, direction: np.ndarray, step: float = 1e-5) -> float:
    """Central difference of scalar ``f`` along ``direction`` (x is not mutated)."""
    return (f(x + step * direction) - f(x - step * direction)) / (2 * step)


def closed_form_parameter_count(channels: list[tuple[int, int]]) -> int:
    return sum(cin * cout * 9 + cout for cin, cout in channels)


def line_trials(count: int, h: int, seed: int):
    """Random single-line images with their analytic ``(phi_deg, rho)``.

    Radii are drawn around the image centre's projection so the line
    crosses the frame.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        phi = rng.uniform(-45, 135)
        centre = (h - 1) / 2 * (math.cos(math.radians(phi)) + math.sin(math.radians(phi)))
        rho = max(centre + rng.uniform(-h / 6, h / 6), 3.0)
        yield phi, rho, render_line(h, rho, phi)


def nearest_angle_index(phi_deg: float, n: int) -> int:
    return int(math.floor((phi_deg + 45) * n / 180 + 0.5)) % n


def within_one_cell(found, expected) -> bool:
    return abs(found[0] - expected[0]) <= 1 and abs(found[1] - expected[1]) <= 1
