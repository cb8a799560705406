"""Macro mean average precision for multilabel ranking.

Per class, samples are ranked by descending score with ties broken by
ascending sample index; AP sums precision at every positive's rank and
divides by the number of positives. Classes without a single positive are
excluded from the mean (their AP slot is NaN).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MetricError(ValueError):
    pass


@dataclass
class EvalResult:
    per_class_ap: np.ndarray  # NaN where the class has no positive
    mean_ap: float

    @property
    def evaluated_classes(self) -> int:
        return int(np.sum(~np.isnan(self.per_class_ap)))


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """AP for one class; NaN when the class has no positive sample."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise MetricError(f"shape mismatch: scores {scores.shape} vs labels {labels.shape}")
    positives = float(np.sum(labels == 1))
    if positives == 0:
        return float("nan")
    # lexsort's last key is primary: descending score, then ascending index.
    order = np.lexsort((np.arange(scores.size), -scores))
    hits = (labels[order] == 1).astype(np.float64)
    precision_at = np.cumsum(hits) / np.arange(1, scores.size + 1)
    return float(np.sum(precision_at * hits) / positives)


def mean_average_precision(scores: np.ndarray, labels: np.ndarray) -> EvalResult:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape != labels.shape:
        raise MetricError(f"expected matching 2-d matrices, got {scores.shape} and {labels.shape}")
    if not np.all((labels == 0) | (labels == 1)):
        raise MetricError("labels must be binary")
    per_class = np.array([average_precision(scores[:, c], labels[:, c]) for c in range(scores.shape[1])])
    valid = ~np.isnan(per_class)
    if not np.any(valid):
        raise MetricError("no class has a positive sample; mAP is undefined")
    return EvalResult(per_class_ap=per_class, mean_ap=float(np.mean(per_class[valid])))


def load_labels_csv(path: str | Path, num_samples: int, num_classes: int) -> np.ndarray:
    """Binary label matrix from a CSV of (sample_id, class_id) pairs."""
    labels = np.zeros((num_samples, num_classes), dtype=np.int8)
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.reader(f):
            if not row or row[0].strip().startswith("#") or row[0].strip() == "sample_id":
                continue
            sample_id, class_id = int(row[0]), int(row[1])
            if not (0 <= sample_id < num_samples and 0 <= class_id < num_classes):
                raise MetricError(f"label pair ({sample_id}, {class_id}) out of range")
            labels[sample_id, class_id] = 1
    return labels


def write_labels_csv(labels: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sample_id", "class_id"])
        for sample_id, class_id in zip(*np.nonzero(labels)):
            writer.writerow([int(sample_id), int(class_id)])


def write_eval_outputs(result: EvalResult, out_dir: str | Path, prefix: str = "eval") -> None:
    """Per-class AP CSV plus a JSON summary, the standard evaluation artifacts."""
    out_dir = Path(out_dir)
    with open(out_dir / f"{prefix}_per_class_ap.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["class_id", "ap"])
        for class_id, ap in enumerate(result.per_class_ap):
            writer.writerow([class_id, "" if np.isnan(ap) else repr(float(ap))])
    summary = {
        "mean_ap": result.mean_ap,
        "evaluated_classes": result.evaluated_classes,
        "num_classes": int(result.per_class_ap.size),
    }
    (out_dir / f"{prefix}_summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
