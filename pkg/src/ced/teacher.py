"""Desk-scale ensemble teacher: seeded random affine members over pooled features.

Members map time-pooled, internally standardized log-mel features to
per-class logits; the ensemble output is the arithmetic mean of member
sigmoid probabilities. An optional signal-weight matrix correlates member
weights with known class signatures, which is the quality knob used by the
synthetic experiments.
"""

from __future__ import annotations

import numpy as np

# Fixed standardization of pooled log-mel features (which live roughly in
# [log(1e-10), 0]) so random member weights produce non-saturated logits.
FEATURE_SHIFT = -8.0
FEATURE_SCALE = 4.0


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class TeacherEnsemble:
    def __init__(
        self,
        num_classes: int,
        feature_dim: int,
        num_members: int = 5,
        seed: int = 0,
        signal_weights: np.ndarray | None = None,
        signal_bias: np.ndarray | None = None,
        signal_scale: float = 0.0,
        noise_scale: float = 0.35,
        bias_offset: float = -1.0,
    ) -> None:
        if num_classes < 1 or feature_dim < 1 or num_members < 1:
            raise ValueError("num_classes, feature_dim and num_members must be positive")
        if signal_weights is not None and signal_weights.shape != (num_classes, feature_dim):
            raise ValueError(
                f"signal_weights must have shape ({num_classes}, {feature_dim}), got {signal_weights.shape}"
            )
        if signal_bias is not None and signal_bias.shape != (num_classes,):
            raise ValueError(f"signal_bias must have shape ({num_classes},), got {signal_bias.shape}")
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.num_members = num_members
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.member_weights = np.empty((num_members, num_classes, feature_dim))
        self.member_bias = np.empty((num_members, num_classes))
        for m in range(num_members):
            noise = rng.standard_normal((num_classes, feature_dim))
            self.member_weights[m] = noise_scale * noise / np.sqrt(feature_dim)
            if signal_weights is not None:
                self.member_weights[m] += signal_scale * signal_weights
            self.member_bias[m] = bias_offset + 0.1 * rng.standard_normal(num_classes)
            if signal_bias is not None:
                self.member_bias[m] += signal_bias

    def predict_from_features(self, pooled: np.ndarray) -> np.ndarray:
        """Mean of member probabilities for pooled features (dim,) or (batch, dim)."""
        pooled = np.asarray(pooled, dtype=np.float64)
        squeeze = pooled.ndim == 1
        feats = np.atleast_2d(pooled)
        if feats.shape[1] != self.feature_dim:
            raise ValueError(f"expected feature dim {self.feature_dim}, got {feats.shape[1]}")
        standardized = (feats - FEATURE_SHIFT) / FEATURE_SCALE
        probs = np.zeros((feats.shape[0], self.num_classes))
        for m in range(self.num_members):
            logits = standardized @ self.member_weights[m].T + self.member_bias[m]
            probs += sigmoid(logits)
        probs /= self.num_members
        return probs[0] if squeeze else probs


def pool_spectrogram(spec: np.ndarray) -> np.ndarray:
    """Mean over time of each mel band; the shared teacher/student feature."""
    return np.asarray(spec, dtype=np.float64).mean(axis=1)


def teacher_predict(spec: np.ndarray, ensemble: TeacherEnsemble) -> np.ndarray:
    """Ensemble class probabilities for one spectrogram (bands, frames)."""
    if spec.ndim != 2 or spec.shape[0] != ensemble.feature_dim:
        raise ValueError(
            f"expected spectrogram with {ensemble.feature_dim} bands, got shape {spec.shape}"
        )
    return ensemble.predict_from_features(pool_spectrogram(spec))
