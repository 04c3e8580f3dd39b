"""Adam optimiser and the training / evaluation loops."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..metrics import labels_from_probs, miou
from .network import Network
from .ops import cross_entropy_loss

log = logging.getLogger(__name__)

LOG_FIELDS = ("epoch", "loss", "miou")


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(0, {k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params, grads, state: AdamState, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update. Returns new ``(params, state)``; inputs are not modified."""
    step = state.step + 1
    new_params, m, v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        m[k] = beta1 * state.m[k] + (1 - beta1) * g
        v[k] = beta2 * state.v[k] + (1 - beta2) * g * g
        m_hat = m[k] / (1 - beta1**step)
        v_hat = v[k] / (1 - beta2**step)
        new_params[k] = (p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype)
    return new_params, AdamState(step, m, v)


def _stack(samples):
    images = np.stack([s.image for s in samples])
    masks = np.stack([s.mask for s in samples])
    return images, masks


def evaluate(net: Network, samples, batch_size: int = 16) -> float:
    """Mean per-image MIoU of the network's argmax segmentation."""
    if not samples:
        raise ValueError("cannot evaluate on an empty dataset")
    scores = []
    for start in range(0, len(samples), batch_size):
        images, masks = _stack(samples[start : start + batch_size])
        labels = labels_from_probs(net.predict(images))
        scores.extend(miou(p, t) for p, t in zip(labels, masks))
    return float(np.mean(scores))


def train(net: Network, dataset, epochs: int, lr: float = 1e-3, seed: int = 0, batch_size: int = 8):
    """Train in place on the ``train`` split; evaluate on ``test`` after each epoch.

    Returns one ``{"epoch", "loss", "miou"}`` row per epoch. ``miou`` is NaN
    when there is no test split.
    """
    samples = list(dataset)
    if not samples:
        raise ValueError("dataset is empty")
    train_set = [s for s in samples if s.split == "train"]
    test_set = [s for s in samples if s.split == "test"]
    if not train_set:
        raise ValueError("dataset has no training samples")
    rng = np.random.default_rng(seed)
    state = AdamState.zeros_like(net.parameters())
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_set))
        total, count = 0.0, 0
        for start in range(0, len(order), batch_size):
            batch = [train_set[i] for i in order[start : start + batch_size]]
            images, masks = _stack(batch)
            probs = net.predict(images)
            loss, grad = cross_entropy_loss(probs, masks)
            net.backward(grad, from_logits=True)
            params, state = adam_step(net.parameters(), net.gradients(), state, lr)
            net.set_parameters(params)
            total += loss * len(batch)
            count += len(batch)
        score = evaluate(net, test_set) if test_set else float("nan")
        row = {"epoch": epoch, "loss": total / count, "miou": score}
        log.info("epoch %d loss %.5f miou %.4f", epoch, row["loss"], score)
        history.append(row)
    return history


def write_log(history, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_FIELDS)
        writer.writeheader()
        for row in history:
            writer.writerow({"epoch": row["epoch"], "loss": repr(row["loss"]), "miou": repr(row["miou"])})
