"""Document-segmentation samples: synthetic generation and MIDV-500 ingestion."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from .image import FormatError, read_pgm, to_gray, write_pgm

log = logging.getLogger(__name__)

DISTORTIONS = ("noise", "highlight", "lines", "blur", "darken")
IMAGE_SUFFIXES = (".tif", ".tiff", ".png", ".jpg", ".jpeg", ".pgm")
TRAIN_TYPES = 30
MIDV_SIZE = 256


@dataclass(frozen=True)
class Sample:
    image: np.ndarray  # (S, S) in [0, 1]
    mask: np.ndarray  # (S, S) of {0, 1}
    source: str
    split: str  # "train" | "test"

    def __post_init__(self):
        if self.image.shape != self.mask.shape:
            raise ValueError(f"image {self.image.shape} and mask {self.mask.shape} differ")
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")


def _as_quad(quad) -> np.ndarray:
    q = np.asarray(quad, dtype=np.float64)
    if q.shape != (4, 2) or not np.all(np.isfinite(q)):
        raise ValueError(f"quad must be four finite (x, y) points, got {q.tolist()}")
    return q


def shoelace_area(quad) -> float:
    q = _as_quad(quad)
    x, y = q[:, 0], q[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def rasterize_quad(quad, out_size) -> tuple[np.ndarray, bool]:
    """Mask of pixels whose centres ``(x + 0.5, y + 0.5)`` lie inside the quad.

    ``out_size`` is ``S`` or ``(H, W)``. Returns ``(mask, degenerate)``;
    a zero-area quad yields an all-zero mask with ``degenerate=True``.
    Inside-ness uses the even-odd crossing rule along each scanline.
    """
    q = _as_quad(quad)
    h, w = (out_size, out_size) if np.isscalar(out_size) else out_size
    mask = np.zeros((h, w), dtype=np.uint8)
    if shoelace_area(q) < 1e-12:
        return mask, True
    cx = np.arange(w) + 0.5
    cy = np.arange(h) + 0.5
    inside = np.zeros((h, w), dtype=bool)
    for k in range(4):
        (x0, y0), (x1, y1) = q[k], q[(k + 1) % 4]
        if y0 == y1:
            continue
        crosses = (y0 > cy) != (y1 > cy)
        x_at = x0 + (cy - y0) * (x1 - x0) / (y1 - y0)
        flip = crosses[:, None] & (cx[None, :] < x_at[:, None])
        inside ^= flip
    mask[inside] = 1
    return mask, False


def corners_inside_count(quad, frame_size) -> int:
    """Corners with ``0 <= x < W`` and ``0 <= y < H``."""
    q = _as_quad(quad)
    h, w = (frame_size, frame_size) if np.isscalar(frame_size) else frame_size
    ok = (q[:, 0] >= 0) & (q[:, 0] < w) & (q[:, 1] >= 0) & (q[:, 1] < h)
    return int(np.count_nonzero(ok))


# ------------------------------------------------------------------ synthetic


def _random_quad(rng: np.random.Generator, size: int) -> np.ndarray:
    while True:
        centre = rng.uniform(0.3, 0.7, size=2) * size
        radii = rng.uniform(0.2, 0.6, size=2) * size
        base = rng.uniform(0, 2 * np.pi)
        angles = base + np.sort(rng.uniform(0, 2 * np.pi, size=4))
        # points on an ellipse in angular order form a convex quad
        quad = centre + np.stack([radii[0] * np.cos(angles), radii[1] * np.sin(angles)], axis=1)
        area = shoelace_area(quad) / size**2
        if 0.1 <= area <= 0.8:
            return quad


def _draw_lines(img, rng, size):
    y, x = np.mgrid[0:size, 0:size] + 0.5
    for _ in range(rng.integers(1, 4)):
        phi = rng.uniform(0, np.pi)
        rho = rng.uniform(0, size * np.sqrt(2)) - size * 0.2
        dist = np.abs(x * np.cos(phi) + y * np.sin(phi) - rho)
        value = rng.uniform(0, 1)
        weight = np.clip(1.0 - dist, 0, 1)
        img = img * (1 - weight) + value * weight
    return img


def _highlight(img, rng, size):
    y, x = np.mgrid[0:size, 0:size] + 0.5
    cx, cy = rng.uniform(0, size, size=2)
    ax, ay = rng.uniform(0.1, 0.35, size=2) * size
    r2 = ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2
    return img + rng.uniform(0.3, 0.7) * np.exp(-r2)


def synth_sample(rng: np.random.Generator, size: int, distortions=DISTORTIONS, split: str = "train", source: str = "synth"):
    quad = _random_quad(rng, size)
    mask, _ = rasterize_quad(quad, size)
    doc = rng.uniform(0.55, 0.95)
    background = rng.uniform(0.05, doc - 0.3)
    img = np.where(mask == 1, doc, background).astype(np.float64)
    chosen = [d for d in DISTORTIONS if d in distortions and rng.random() < 0.5]
    if "lines" in chosen:
        img = _draw_lines(img, rng, size)
    if "highlight" in chosen:
        img = _highlight(img, rng, size)
    if "blur" in chosen:
        img = uniform_filter(img, size=3, mode="nearest")
    if "darken" in chosen:
        img = img * rng.uniform(0.5, 0.9)
    if "noise" in chosen:
        img = img + rng.normal(0, rng.uniform(0, 0.1), size=img.shape)
    return Sample(np.clip(img, 0, 1), mask.astype(np.float64), source, split)


def synth_dataset(count: int, size: int = 64, seed: int = 0, distortions=DISTORTIONS, split: str = "train") -> list[Sample]:
    """``count`` random quad documents; each draws a random subset of ``distortions``."""
    if size < 2 or size & (size - 1):
        raise ValueError(f"size must be a power of two, got {size}")
    unknown = set(distortions) - set(DISTORTIONS)
    if unknown:
        raise ValueError(f"unknown distortions: {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    return [synth_sample(rng, size, distortions, split, f"synth-{seed}-{i:05d}") for i in range(count)]


def synth_splits(train: int, test: int, size: int = 64, seed: int = 0, distortions=DISTORTIONS) -> list[Sample]:
    """Independent train and test draws (test uses ``seed + 1``)."""
    return synth_dataset(train, size, seed, distortions, "train") + synth_dataset(test, size, seed + 1, distortions, "test")


def export_dataset(samples, directory) -> Path:
    """Write paired PGM files (image, mask) and ``index.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "mask", "source", "split"])
        for i, s in enumerate(samples):
            img_name, mask_name = f"{i:05d}_image.pgm", f"{i:05d}_mask.pgm"
            write_pgm(s.image, d / img_name)
            write_pgm(s.mask, d / mask_name)
            writer.writerow([img_name, mask_name, s.source, s.split])
    return d


def load_exported(directory) -> list[Sample]:
    d = Path(directory)
    index = d / "index.csv"
    if not index.is_file():
        raise FileNotFoundError(f"no index.csv in {d}")
    samples = []
    with open(index, newline="") as fh:
        for row in csv.DictReader(fh):
            mask = (read_pgm(d / row["mask"]) >= 0.5).astype(np.float64)
            samples.append(Sample(read_pgm(d / row["image"]), mask, row["source"], row["split"]))
    return samples


# ------------------------------------------------------------------- MIDV-500


def _type_index(folder: Path, position: int) -> int:
    m = re.match(r"(\d+)", folder.name)
    return int(m.group(1)) if m else position


def _annotation_for(image: Path, type_dir: Path) -> Path:
    images = type_dir / "images"
    if images in image.parents:
        rel = image.relative_to(images).with_suffix(".json")
        candidate = type_dir / "ground_truth" / rel
        if candidate.exists():
            return candidate
    return image.with_suffix(".json")


def _read_image(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return to_gray(arr)


def resize_nearest(img: np.ndarray, size: int) -> np.ndarray:
    h, w = img.shape
    rows = np.minimum((np.arange(size) + 0.5) * h / size, h - 1).astype(int)
    cols = np.minimum((np.arange(size) + 0.5) * w / size, w - 1).astype(int)
    return img[rows[:, None], cols[None, :]]


def ingest_midv(root, size: int = MIDV_SIZE, stats: dict | None = None) -> list[Sample]:
    """Load a MIDV-500 style tree into resized samples with quad masks.

    Layout: one folder per document type (``01_alb_id`` ...), each with
    ``images/**/<frame>.<ext>`` and ``ground_truth/**/<frame>.json``
    holding a ``"quad"`` of four ``[x, y]`` corners (a JSON next to the
    image is accepted too). Frames with fewer than three corners inside
    the resized frame are dropped; types 1-30 go to ``train``, the rest to
    ``test``. Unreadable frames are skipped and counted in ``stats``.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a directory")
    stats = {} if stats is None else stats
    stats.update(skipped=0, filtered=0)
    samples = []
    type_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    for position, type_dir in enumerate(type_dirs, start=1):
        split = "train" if _type_index(type_dir, position) <= TRAIN_TYPES else "test"
        frames = sorted(p for p in type_dir.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
        for frame in frames:
            try:
                meta = json.loads(_annotation_for(frame, type_dir).read_text())
                quad = _as_quad(meta["quad"])
                img = _read_image(frame)
            except (OSError, ValueError, KeyError, TypeError, FormatError) as exc:
                log.warning("skipping %s: %s", frame, exc)
                stats["skipped"] += 1
                continue
            h, w = img.shape
            scaled = quad * np.array([size / w, size / h])
            if corners_inside_count(scaled, size) < 3:
                stats["filtered"] += 1
                continue
            mask, _ = rasterize_quad(scaled, size)
            source = str(frame.relative_to(root))
            samples.append(Sample(resize_nearest(img, size), mask.astype(np.float64), source, split))
    return samples
