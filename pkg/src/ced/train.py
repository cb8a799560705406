"""Label-free student training from a finalized logit store.

The trainer never sees ground-truth labels: its only supervision is the
stored top-k teacher probabilities, and its inputs are replayed (or
deliberately not replayed, for the ablation arms) from the stored seeds.
Sample order is a uniform seed-derived permutation per epoch; when the run
is longer than the store, stored epochs are cycled via epoch mod E.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import FeatureConfig
from .corpus import Corpus
from .features import augmented_spectrogram, log_mel
from .losses import clamp_probs, record_target
from .model import StudentModel
from .rng import StreamTag, derive_rng
from .schedule import lr_schedule
from .store import LogitStoreReader
from .teacher import pool_spectrogram, sigmoid

INPUT_MODES = ("replay", "clean", "independent")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int
    batch_size: int = 16
    peak_lr: float = 0.02
    warmup_steps: int = 20
    final_lr_fraction: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if not 0.0 < self.final_lr_fraction <= 1.0:
            raise ValueError("final_lr_fraction must lie in (0, 1]")


@dataclass
class HistoryRow:
    step: int
    lr: float
    loss: float


class Adam:
    def __init__(self, shapes: dict[str, tuple[int, ...]], cfg: TrainingConfig) -> None:
        self.cfg = cfg
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2, eps = self.cfg.adam_beta1, self.cfg.adam_beta2, self.cfg.adam_eps
        for key, grad in grads.items():
            self.m[key] = b1 * self.m[key] + (1.0 - b1) * grad
            self.v[key] = b2 * self.v[key] + (1.0 - b2) * grad * grad
            m_hat = self.m[key] / (1.0 - b1**self.t)
            v_hat = self.v[key] / (1.0 - b2**self.t)
            params[key] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _clean_pooled_features(corpus: Corpus, cfg: FeatureConfig, threads: int = 1) -> np.ndarray:
    def one(i: int) -> np.ndarray:
        return pool_spectrogram(log_mel(corpus.clip(i), cfg))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(len(corpus))))
    else:
        rows = [one(i) for i in range(len(corpus))]
    return np.stack(rows)


def train(
    store: LogitStoreReader,
    corpus: Corpus,
    student: StudentModel,
    feature_cfg: FeatureConfig,
    config: TrainingConfig,
    input_mode: str = "replay",
    threads: int = 1,
) -> list[HistoryRow]:
    """Train the student in place; returns the (step, lr, loss) history.

    input_mode selects what the student sees:
      replay       the stored seed's augmented view, identical to the
                   teacher's input (the consistent-teaching path)
      clean        the un-augmented log-mel spectrogram
      independent  a freshly augmented view with per-step seeds unrelated
                   to the stored ones; mixup additionally blends the two
                   partners' stored targets with the fresh weight
    """
    if input_mode not in INPUT_MODES:
        raise TrainingError(f"input_mode must be one of {INPUT_MODES}, got {input_mode!r}")
    header = store.header
    if len(corpus) != header.num_samples:
        raise TrainingError(
            f"corpus holds {len(corpus)} samples but the store was built for {header.num_samples}"
        )
    if (student.num_classes, student.feature_dim) != (header.num_classes, feature_cfg.num_mel_bands):
        raise TrainingError("student dimensions do not match the store header and feature config")
    if config.epochs == 0:
        return []

    num_samples, num_classes = header.num_samples, header.num_classes

    # Input normalization is frozen from the clean corpus statistics in every
    # mode, so ablation arms differ only in what the trained layers see.
    clean_pooled = _clean_pooled_features(corpus, feature_cfg, threads=threads)
    if not student.norm_fitted:
        student.fit_input_norm(clean_pooled)

    targets_cache: dict[tuple[int, int], np.ndarray] = {}

    def target_for(sample_id: int, stored_epoch: int) -> np.ndarray:
        key = (sample_id, stored_epoch)
        if key not in targets_cache:
            targets_cache[key] = record_target(store.read_record(sample_id, stored_epoch), num_classes)
        return targets_cache[key]

    replay_cache: dict[tuple[int, int], np.ndarray] = {}

    def replay_pooled(sample_id: int, stored_epoch: int) -> np.ndarray:
        key = (sample_id, stored_epoch)
        if key not in replay_cache:
            seed = store.read_record(sample_id, stored_epoch).seed
            spec, _ = augmented_spectrogram(sample_id, seed, corpus, feature_cfg)
            replay_cache[key] = pool_spectrogram(spec)
        return replay_cache[key]

    order_rng = derive_rng(config.seed, StreamTag.SAMPLE_ORDER)
    fresh_rng = derive_rng(config.seed, StreamTag.STUDENT_AUG)

    steps_per_epoch = (num_samples + config.batch_size - 1) // config.batch_size
    total_steps = config.epochs * steps_per_epoch
    params = {"weights": student.weights, "bias": student.bias}
    optimizer = Adam({k: v.shape for k, v in params.items()}, config)

    history: list[HistoryRow] = []
    step = 0
    for epoch in range(config.epochs):
        stored_epoch = epoch % header.stored_epochs
        order = order_rng.shuffled_indices(num_samples)
        for start in range(0, num_samples, config.batch_size):
            batch = order[start : start + config.batch_size]
            inputs = np.empty((len(batch), student.feature_dim))
            targets = np.empty((len(batch), num_classes))
            for row, sample_id in enumerate(batch):
                if input_mode == "replay":
                    inputs[row] = replay_pooled(sample_id, stored_epoch)
                    targets[row] = target_for(sample_id, stored_epoch)
                elif input_mode == "clean":
                    inputs[row] = clean_pooled[sample_id]
                    targets[row] = target_for(sample_id, stored_epoch)
                else:
                    fresh_seed = fresh_rng.next_u32()
                    spec, plan = augmented_spectrogram(sample_id, fresh_seed, corpus, feature_cfg)
                    inputs[row] = pool_spectrogram(spec)
                    target = target_for(sample_id, stored_epoch)
                    if plan.mixup_enabled:
                        partner = target_for(plan.mixup_partner, stored_epoch)
                        target = plan.mixup_lambda * target + (1.0 - plan.mixup_lambda) * partner
                    targets[row] = target

            normalized = student.normalize(inputs)
            probs = sigmoid(student.logits_from_features(normalized))
            clamped = clamp_probs(probs)
            loss = float(
                -np.mean(targets * np.log(clamped) + (1.0 - targets) * np.log(1.0 - clamped))
            )
            dz = (probs - targets) / (num_classes * len(batch))
            grads = {"weights": dz.T @ normalized, "bias": dz.sum(axis=0)}
            lr = lr_schedule(
                step,
                peak_lr=config.peak_lr,
                warmup_steps=config.warmup_steps,
                total_steps=total_steps,
                final_lr_fraction=config.final_lr_fraction,
            )
            optimizer.step(params, grads, lr)
            history.append(HistoryRow(step=step, lr=lr, loss=loss))
            step += 1
    return history


def write_history_csv(history: list[HistoryRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "lr", "loss"])
        for row in history:
            writer.writerow([row.step, repr(row.lr), repr(row.loss)])
