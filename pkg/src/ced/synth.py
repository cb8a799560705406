"""Synthetic multilabel audio task for desk-scale end-to-end runs.

Each class owns a tone frequency; a clip is the sum of the tones of its
active classes plus white noise. The class-to-band templates derived from
the same tones give the ensemble teacher label-correlated weights, so the
teacher genuinely carries signal about the generative labels without any
model ever reading per-sample labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, write_wav
from .config import FeatureConfig
from .features import log_mel
from .metrics import write_labels_csv
from .teacher import FEATURE_SCALE, FEATURE_SHIFT, TeacherEnsemble, pool_spectrogram


@dataclass(frozen=True)
class SyntheticTaskConfig:
    num_classes: int = 24
    num_train: int = 160
    num_eval: int = 240
    clip_seconds: float = 1.0
    sample_rate: int = 16000
    label_prob: float = 0.1
    min_tone_hz: float = 300.0
    max_tone_hz: float = 6500.0
    tone_amp_min: float = 0.25
    tone_amp_max: float = 0.6
    noise_rms: float = 0.01
    seed: int = 0


@dataclass
class SyntheticTask:
    cfg: SyntheticTaskConfig
    train_dir: Path
    eval_dir: Path
    eval_labels_path: Path
    train_labels: np.ndarray  # kept only for analysis; the trainer never sees them
    eval_labels: np.ndarray


def class_tone_frequencies(cfg: SyntheticTaskConfig) -> np.ndarray:
    # Uniform spacing on the mel scale keeps neighbouring classes a constant
    # number of filterbank bands apart; geometric Hz spacing would crowd the
    # low end into adjacent bands and turn neighbours into confusables.
    from .features import hz_to_mel, mel_to_hz

    return mel_to_hz(np.linspace(hz_to_mel(cfg.min_tone_hz), hz_to_mel(cfg.max_tone_hz), cfg.num_classes))


def _sample_labels(rng: np.random.Generator, count: int, cfg: SyntheticTaskConfig) -> np.ndarray:
    labels = (rng.random((count, cfg.num_classes)) < cfg.label_prob).astype(np.int8)
    for row in range(count):
        if not labels[row].any():
            labels[row, rng.integers(cfg.num_classes)] = 1
    return labels


def _synthesize_clip(rng: np.random.Generator, label_row: np.ndarray, cfg: SyntheticTaskConfig) -> np.ndarray:
    n = int(round(cfg.clip_seconds * cfg.sample_rate))
    t = np.arange(n) / cfg.sample_rate
    clip = rng.normal(0.0, cfg.noise_rms, size=n)
    freqs = class_tone_frequencies(cfg)
    for class_id in np.nonzero(label_row)[0]:
        amp = rng.uniform(cfg.tone_amp_min, cfg.tone_amp_max)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        clip += amp * np.sin(2.0 * np.pi * freqs[class_id] * t + phase)
    peak = np.max(np.abs(clip))
    if peak > 0.95:
        clip *= 0.95 / peak
    return clip


def _write_split(directory: Path, labels: np.ndarray, rng: np.random.Generator, cfg: SyntheticTaskConfig) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(labels.shape[0])))
    for row in range(labels.shape[0]):
        clip = _synthesize_clip(rng, labels[row], cfg)
        write_wav(str(directory / f"clip_{row:0{width}d}.wav"), clip, cfg.sample_rate)


def generate_task(root: str | Path, cfg: SyntheticTaskConfig) -> SyntheticTask:
    root = Path(root)
    rng = np.random.default_rng(cfg.seed)
    train_labels = _sample_labels(rng, cfg.num_train, cfg)
    eval_labels = _sample_labels(rng, cfg.num_eval, cfg)
    train_dir = root / "train"
    eval_dir = root / "eval"
    _write_split(train_dir, train_labels, rng, cfg)
    _write_split(eval_dir, eval_labels, rng, cfg)
    eval_labels_path = root / "eval_labels.csv"
    write_labels_csv(eval_labels, eval_labels_path)
    return SyntheticTask(
        cfg=cfg,
        train_dir=train_dir,
        eval_dir=eval_dir,
        eval_labels_path=eval_labels_path,
        train_labels=train_labels,
        eval_labels=eval_labels,
    )


TEMPLATE_CUTOFF = 0.5


def band_templates(task_cfg: SyntheticTaskConfig, feature_cfg: FeatureConfig) -> np.ndarray:
    """Class-to-mel-band signatures computed from clean single-tone clips.

    Row c is the pooled log-mel response of class c's tone above the
    silence floor, normalized to unit peak. The log domain gives spectral
    leakage wide skirts that would make neighbouring classes confusable,
    so everything below TEMPLATE_CUTOFF of the peak is cut away and the
    remainder rescaled; the teacher's response to class c then comes from
    the band(s) that actually own the tone.
    """
    n = int(round(task_cfg.clip_seconds * task_cfg.sample_rate))
    t = np.arange(n) / feature_cfg.sample_rate
    floor = pool_spectrogram(
        log_mel(AudioClip(np.zeros(n), feature_cfg.sample_rate), feature_cfg)
    )
    templates = np.zeros((task_cfg.num_classes, feature_cfg.num_mel_bands))
    for class_id, freq in enumerate(class_tone_frequencies(task_cfg)):
        tone = 0.5 * np.sin(2.0 * np.pi * freq * t)
        pooled = pool_spectrogram(log_mel(AudioClip(tone, feature_cfg.sample_rate), feature_cfg))
        response = pooled - floor
        response = response / np.max(response)
        response = np.maximum(response - TEMPLATE_CUTOFF, 0.0) / (1.0 - TEMPLATE_CUTOFF)
        templates[class_id] = response
    return templates


def background_reference(task_cfg: SyntheticTaskConfig, feature_cfg: FeatureConfig) -> np.ndarray:
    """Standardized pooled features of a noise-only clip at the task's noise level."""
    rng = np.random.default_rng(12345)
    n = int(round(task_cfg.clip_seconds * task_cfg.sample_rate))
    noise = rng.normal(0.0, task_cfg.noise_rms, size=n)
    pooled = pool_spectrogram(log_mel(AudioClip(noise, feature_cfg.sample_rate), feature_cfg))
    return (pooled - FEATURE_SHIFT) / FEATURE_SCALE


def build_signal_teacher(
    task_cfg: SyntheticTaskConfig,
    feature_cfg: FeatureConfig,
    seed: int = 0,
    num_members: int = 5,
    signal_scale: float = 5.0,
    noise_scale: float = 0.4,
    bias_offset: float = -4.0,
) -> TeacherEnsemble:
    """Label-correlated ensemble whose logits reference the noise floor.

    Subtracting each template's response to a background clip keeps absent
    classes near sigmoid(bias_offset) instead of reacting to the noise
    floor's energy, which gives the teacher a realistic tagging operating
    point: cold negatives, hot positives, informative mid-range mass.
    """
    templates = band_templates(task_cfg, feature_cfg)
    signal_bias = -signal_scale * (templates @ background_reference(task_cfg, feature_cfg))
    return TeacherEnsemble(
        num_classes=task_cfg.num_classes,
        feature_dim=feature_cfg.num_mel_bands,
        num_members=num_members,
        seed=seed,
        signal_weights=templates,
        signal_bias=signal_bias,
        signal_scale=signal_scale,
        noise_scale=noise_scale,
        bias_offset=bias_offset,
    )
