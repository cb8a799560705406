"""Class-averaged binary cross entropy against sparse top-k targets.

Targets are the stored top-k teacher probabilities with an implicit zero
for every other class, so the loss only needs the record entries plus one
sum over log(1 - p). Probabilities are clamped before any log; the
analytic gradient below is exact away from the clamp boundary.
"""

from __future__ import annotations

import numpy as np

from .store import LogitRecord, densify

PROB_EPS = 1e-7


def clamp_probs(probs: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(probs, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


def dense_bce(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean-over-classes BCE for a full target vector."""
    p = clamp_probs(probs)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: probs {p.shape} vs targets {t.shape}")
    return float(-np.sum(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)) / p.size)


def dense_bce_grad(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of dense_bce with respect to pre-sigmoid logits."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    return (p - t) / p.size


def sparse_bce(probs: np.ndarray, record: LogitRecord, num_classes: int) -> float:
    """BCE against a top-k record without materializing the dense target.

    Splitting the sum as sum(log(1-p)) plus a correction on the stored
    entries is algebraically identical to the dense form with zero-filled
    targets.
    """
    p = clamp_probs(probs)
    if p.shape != (num_classes,):
        raise ValueError(f"expected probs of shape ({num_classes},), got {p.shape}")
    idx = record.indices
    vals = record.values
    base = np.sum(np.log(1.0 - p))
    correction = np.sum(vals * (np.log(p[idx]) - np.log(1.0 - p[idx])))
    return float(-(base + correction) / num_classes)


def sparse_bce_grad(probs: np.ndarray, record: LogitRecord, num_classes: int) -> np.ndarray:
    """Gradient of sparse_bce with respect to pre-sigmoid logits: (p - t) / C."""
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (num_classes,):
        raise ValueError(f"expected probs of shape ({num_classes},), got {p.shape}")
    grad = p.copy()
    grad[record.indices] -= record.values
    return grad / num_classes


def record_target(record: LogitRecord, num_classes: int) -> np.ndarray:
    """Dense training target for one record (zero-filled outside the top k)."""
    return densify(record, num_classes)
