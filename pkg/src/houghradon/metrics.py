"""Segmentation quality: mean intersection over union."""

from __future__ import annotations

import numpy as np


def _labels(arr, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.dtype.kind == "b":
        return arr.astype(np.int64)
    if arr.dtype.kind == "f":
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name} must be binary")
    return arr.astype(np.int64)


def iou_per_class(prediction, truth, num_classes: int = 2) -> np.ndarray:
    """IoU of every class; a class absent from both masks scores 1."""
    pred = _labels(prediction, "prediction")
    true = _labels(truth, "truth")
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: prediction {pred.shape} vs truth {true.shape}")
    if pred.size and (pred.min() < 0 or pred.max() >= num_classes or true.min() < 0 or true.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    scores = np.empty(num_classes)
    for c in range(num_classes):
        a = pred == c
        g = true == c
        union = np.count_nonzero(a | g)
        scores[c] = 1.0 if union == 0 else np.count_nonzero(a & g) / union
    return scores


def miou(prediction, truth, num_classes: int = 2) -> float:
    """Mean IoU over background and foreground."""
    return float(iou_per_class(prediction, truth, num_classes).mean())


def labels_from_probs(probs) -> np.ndarray:
    """Per-pixel argmax over the channel axis (-3); exact ties go to class 0."""
    return np.argmax(np.asarray(probs), axis=-3)
