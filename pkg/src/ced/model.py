"""Desk-scale student: an affine multilabel classifier over pooled mel features.

The model normalizes its input with running per-band statistics frozen
after a warm pass (a stand-in for batch normalization that avoids any
batch-size coupling), then applies a trained affine map and a sigmoid.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .teacher import pool_spectrogram, sigmoid

MODEL_MAGIC = b"CEDM"
MODEL_VERSION = 1
NORM_EPS = 1e-5


class ModelFormatError(ValueError):
    pass


class StudentModel:
    def __init__(self, num_classes: int, feature_dim: int) -> None:
        if num_classes < 1 or feature_dim < 1:
            raise ValueError("num_classes and feature_dim must be positive")
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.weights = np.zeros((num_classes, feature_dim))
        self.bias = np.zeros(num_classes)
        self.norm_mean = np.zeros(feature_dim)
        self.norm_var = np.ones(feature_dim)
        self.norm_fitted = False

    def fit_input_norm(self, pooled_rows: np.ndarray) -> None:
        """Freeze per-band normalization statistics from a warm pass."""
        rows = np.atleast_2d(np.asarray(pooled_rows, dtype=np.float64))
        self.norm_mean = rows.mean(axis=0)
        self.norm_var = rows.var(axis=0)
        self.norm_fitted = True

    def normalize(self, pooled: np.ndarray) -> np.ndarray:
        return (pooled - self.norm_mean) / np.sqrt(self.norm_var + NORM_EPS)

    def logits_from_features(self, normalized: np.ndarray) -> np.ndarray:
        return normalized @ self.weights.T + self.bias

    def predict_from_features(self, pooled: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits_from_features(self.normalize(pooled)))

    def predict_proba(self, spec: np.ndarray) -> np.ndarray:
        """Class probabilities in (0, 1) for one spectrogram (bands, frames)."""
        return self.predict_from_features(pool_spectrogram(spec))

    # Serialization is a fixed little-endian layout rather than npz so two
    # identical trainings produce byte-identical model files.
    def save(self, path: str | Path) -> None:
        arrays = [self.weights, self.bias, self.norm_mean, self.norm_var]
        with open(path, "wb") as f:
            f.write(MODEL_MAGIC)
            f.write(
                struct.pack(
                    "<HHIIB", MODEL_VERSION, 0, self.num_classes, self.feature_dim, int(self.norm_fitted)
                )
            )
            for arr in arrays:
                f.write(np.asarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "StudentModel":
        raw = Path(path).read_bytes()
        if raw[:4] != MODEL_MAGIC:
            raise ModelFormatError(f"bad model magic in {path}")
        version, _reserved, num_classes, feature_dim, fitted = struct.unpack_from("<HHIIB", raw, 4)
        if version != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {version}")
        model = cls(num_classes, feature_dim)
        offset = 4 + struct.calcsize("<HHIIB")
        shapes = [(num_classes, feature_dim), (num_classes,), (feature_dim,), (feature_dim,)]
        names = ["weights", "bias", "norm_mean", "norm_var"]
        expected = offset + 8 * sum(int(np.prod(s)) for s in shapes)
        if len(raw) != expected:
            raise ModelFormatError(f"model file {path} is {len(raw)} bytes, expected {expected}")
        for name, shape in zip(names, shapes):
            count = int(np.prod(shape))
            arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
            setattr(model, name, arr)
            offset += count * 8
        model.norm_fitted = bool(fitted)
        return model
