"""Grid containers and file IO.

Images are plain 2-D ``float64`` arrays (row = y, column = x); feature maps
are 3-D arrays ``(channels, height, width)``. Two on-disk formats are
supported: binary 8-bit PGM (``P5``) and the raw ``HRT1`` tensor container::

    offset  size  field
    0       4     magic b"HRT1"
    4       4     channels  (uint32 LE)
    8       4     height    (uint32 LE)
    12      4     width     (uint32 LE)
    16      4*N   float32 LE payload, row-major (c, y, x)
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

TENSOR_MAGIC = b"HRT1"
_TENSOR_HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    """Raised when a file does not match the format it claims to be."""


def as_image(values, *, name: str = "image") -> np.ndarray:
    """Validate and return a finite 2-D float64 copy of ``values``."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D grid, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_featuremap(values, *, name: str = "feature map") -> np.ndarray:
    """Validate and return a 3-D float64 copy ``(channels, height, width)``."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"{name} must have shape (C, H, W), got {arr.shape}")
    return arr


def to_gray(rgb) -> np.ndarray:
    """ITU-R BT.601 luma of an ``(H, W, 3)`` array, same value range as input."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 2:
        return rgb.copy()
    return rgb[..., :3] @ np.array([0.299, 0.587, 0.114])


# --------------------------------------------------------------------------- PGM


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last token.
    """
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            break
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def decode_pgm(data: bytes) -> np.ndarray:
    """Decode a binary 8-bit PGM byte string into an image with values in [0, 1]."""
    tokens, pos = _pgm_tokens(data, 4)
    if not tokens or tokens[0] != b"P5":
        magic = tokens[0].decode("latin-1") if tokens else ""
        raise FormatError(f"magic: expected 'P5', got {magic!r}")
    if len(tokens) < 4:
        raise FormatError("header: incomplete PGM header")
    fields = ("width", "height", "maxval")
    values = {}
    for field, tok in zip(fields, tokens[1:]):
        try:
            values[field] = int(tok)
        except ValueError:
            raise FormatError(f"{field}: not an integer ({tok!r})") from None
        if values[field] <= 0:
            raise FormatError(f"{field}: must be positive, got {values[field]}")
    if values["maxval"] != 255:
        raise FormatError(f"maxval: only 255 is supported, got {values['maxval']}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("header: missing whitespace after maxval")
    payload = data[pos + 1 :]
    w, h = values["width"], values["height"]
    if len(payload) < w * h:
        raise FormatError(f"payload: truncated, expected {w * h} bytes, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8, count=w * h)
    return pixels.reshape(h, w).astype(np.float64) / 255.0


def encode_pgm(img) -> bytes:
    """Encode an image as binary PGM; values are clamped to [0, 1] first."""
    arr = as_image(img)
    q = np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    h, w = arr.shape
    return b"P5\n%d %d\n255\n" % (w, h) + q.tobytes()


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        return decode_pgm(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_pgm(img, path: str | os.PathLike) -> None:
    data = encode_pgm(img)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write PGM to {path}: {exc}") from exc


# ------------------------------------------------------------------------ tensor


def encode_tensor(fm) -> bytes:
    arr = as_featuremap(fm)
    c, h, w = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return _TENSOR_HEADER.pack(TENSOR_MAGIC, c, h, w) + payload


def decode_tensor(data: bytes) -> np.ndarray:
    """Decode an ``HRT1`` container. Values are returned as float32."""
    if len(data) < _TENSOR_HEADER.size:
        raise FormatError(f"header: need {_TENSOR_HEADER.size} bytes, got {len(data)}")
    magic, c, h, w = _TENSOR_HEADER.unpack_from(data)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"magic: expected {TENSOR_MAGIC!r}, got {magic!r}")
    expected = 4 * c * h * w
    got = len(data) - _TENSOR_HEADER.size
    if got != expected:
        raise FormatError(
            f"payload: header says {c}x{h}x{w} ({expected} bytes), payload has {got} bytes"
        )
    arr = np.frombuffer(data, dtype="<f4", offset=_TENSOR_HEADER.size)
    return arr.reshape(c, h, w).astype(np.float32)


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        return decode_tensor(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_tensor(fm, path: str | os.PathLike) -> None:
    data = encode_tensor(fm)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write tensor to {path}: {exc}") from exc
