"""Deterministic audio-to-spectrogram pipeline with seed-replayable augmentation.

Every stochastic choice (waveform shift, mask geometry, mixup partner and
weight) is derived from a single stored 32-bit seed through per-stage
SplitMix64 substreams, so the exact input the teacher saw at extraction
time can be reproduced bit for bit at training time.

Draw order, fixed forever because replay depends on it:
    WAVE_SHIFT stream:   shift offset
    SPEC_MASK stream:    time width, time start, frequency width, frequency start
    MIXUP stream:        partner id, then (beta mode only) one uniform for the weight
The mixup partner's own shift and masks come from PARTNER_* streams of the
same seed, so one seed still determines the whole augmented input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio import AudioClip
from .config import FeatureConfig
from .corpus import Corpus
from .rng import StreamTag, derive_rng


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentationPlan:
    """Fully resolved stochastic choices for one clip, derived from one seed."""

    seed: int
    shift_offset: int
    time_mask_start: int
    time_mask_width: int
    freq_mask_start: int
    freq_mask_width: int
    mixup_enabled: bool
    mixup_partner: int
    mixup_lambda: float


def hann_window(length: int) -> np.ndarray:
    # Periodic Hann, the usual analysis-window convention for STFTs.
    k = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / length)


def hz_to_mel(freq_hz):
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def _filterbank_cached(sample_rate, window_samples, num_mel_bands, fmin_hz, fmax_hz) -> np.ndarray:
    n_bins = window_samples // 2 + 1
    fft_freqs = np.arange(n_bins) * (sample_rate / window_samples)
    mel_points = np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), num_mel_bands + 2)
    hz_points = mel_to_hz(mel_points)
    weights = np.zeros((num_mel_bands, n_bins), dtype=np.float64)
    for band in range(num_mel_bands):
        low, center, high = hz_points[band], hz_points[band + 1], hz_points[band + 2]
        rising = (fft_freqs - low) / (center - low)
        falling = (high - fft_freqs) / (high - center)
        weights[band] = np.maximum(0.0, np.minimum(rising, falling))
    return weights


def mel_filterbank(cfg: FeatureConfig) -> np.ndarray:
    """Triangular unit-peak filters on the HTK mel scale, shape (bands, fft bins)."""
    return _filterbank_cached(cfg.sample_rate, cfg.window_samples, cfg.num_mel_bands, cfg.fmin_hz, cfg.fmax_hz)


def frame_count(num_samples: int, cfg: FeatureConfig) -> int:
    if num_samples < cfg.window_samples:
        raise FeatureError(
            f"clip of {num_samples} samples is shorter than one window ({cfg.window_samples})"
        )
    return 1 + (num_samples - cfg.window_samples) // cfg.hop_samples


def log_mel(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Log mel spectrogram, shape (num_mel_bands, frames).

    Hann-windowed power spectrum without padding, mel filterbank, natural
    log floored at cfg.log_floor.
    """
    if clip.sample_rate != cfg.sample_rate:
        raise FeatureError(f"clip rate {clip.sample_rate} does not match config rate {cfg.sample_rate}")
    samples = np.asarray(clip.samples, dtype=np.float64)
    frames = frame_count(samples.shape[0], cfg)
    starts = np.arange(frames) * cfg.hop_samples
    segments = samples[starts[:, None] + np.arange(cfg.window_samples)[None, :]]
    windowed = segments * hann_window(cfg.window_samples)[None, :]
    spectrum = np.fft.rfft(windowed, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    mel_energy = power @ mel_filterbank(cfg).T  # (frames, bands)
    return np.log(np.maximum(mel_energy.T, cfg.log_floor))


def wave_shift(clip: AudioClip, shift_offset: int) -> AudioClip:
    """Circular shift: out[i] = in[(i + shift_offset) mod len]."""
    n = len(clip)
    offset = shift_offset % n
    if offset == 0:
        return clip
    rolled = np.concatenate([clip.samples[offset:], clip.samples[:offset]])
    return AudioClip(samples=rolled, sample_rate=clip.sample_rate)


def derive_plan(
    seed: int,
    *,
    clip_samples: int,
    frames: int,
    bands: int,
    corpus_size: int,
    cfg: FeatureConfig,
    partner_streams: bool = False,
) -> AugmentationPlan:
    """Resolve every stochastic choice for one clip from the seed.

    partner_streams switches to the PARTNER_* stream tags so a mixup
    partner gets its own independent shift and masks from the same seed;
    partner plans never nest further mixup.
    """
    shift_tag = StreamTag.PARTNER_WAVE_SHIFT if partner_streams else StreamTag.WAVE_SHIFT
    mask_tag = StreamTag.PARTNER_SPEC_MASK if partner_streams else StreamTag.SPEC_MASK

    shift_range = int(clip_samples * cfg.max_shift_fraction)
    shift = derive_rng(seed, shift_tag).next_below(shift_range) if shift_range > 0 else 0

    masks = derive_rng(seed, mask_tag)
    time_width = min(masks.next_below(cfg.max_time_mask + 1), frames)
    time_start = masks.next_below(frames - time_width + 1)
    freq_width = min(masks.next_below(cfg.max_freq_mask + 1), bands)
    freq_start = masks.next_below(bands - freq_width + 1)

    mixup_enabled = cfg.mixup_enabled and not partner_streams
    partner = 0
    lam = 1.0
    if mixup_enabled:
        mix = derive_rng(seed, StreamTag.MIXUP)
        partner = mix.next_below(corpus_size)
        if cfg.mixup == "beta":
            # Beta(1/2, 1/2) is the arcsine law; one uniform draw inverts its CDF.
            lam = math.sin(0.5 * math.pi * mix.random()) ** 2
        else:
            lam = 0.5

    return AugmentationPlan(
        seed=seed,
        shift_offset=shift,
        time_mask_start=time_start,
        time_mask_width=time_width,
        freq_mask_start=freq_start,
        freq_mask_width=freq_width,
        mixup_enabled=mixup_enabled,
        mixup_partner=partner,
        mixup_lambda=lam,
    )


def spec_augment(spec: np.ndarray, plan: AugmentationPlan, cfg: FeatureConfig) -> np.ndarray:
    """Apply one contiguous time mask and one frequency mask from the plan.

    Masked cells are set to log(log_floor): in the log domain that is
    silence, whereas 0 would be a loud bin.
    """
    bands, frames = spec.shape
    if plan.time_mask_start + plan.time_mask_width > frames or plan.freq_mask_start + plan.freq_mask_width > bands:
        raise FeatureError("mask exceeds spectrogram bounds")
    fill = math.log(cfg.log_floor)
    out = spec.copy()
    out[:, plan.time_mask_start : plan.time_mask_start + plan.time_mask_width] = fill
    out[plan.freq_mask_start : plan.freq_mask_start + plan.freq_mask_width, :] = fill
    return out


def mixup_blend(spec_a: np.ndarray, spec_b: np.ndarray, lam: float) -> np.ndarray:
    """Convex blend lam * a + (1 - lam) * b; also used for blending targets."""
    if spec_a.shape != spec_b.shape:
        raise FeatureError(f"shape mismatch: {spec_a.shape} vs {spec_b.shape}")
    return lam * spec_a + (1.0 - lam) * spec_b


def _augmented_single(clip: AudioClip, plan: AugmentationPlan, cfg: FeatureConfig) -> np.ndarray:
    shifted = wave_shift(clip, plan.shift_offset)
    return spec_augment(log_mel(shifted, cfg), plan, cfg)


def augmented_spectrogram(
    sample_id: int, seed: int, corpus: Corpus, cfg: FeatureConfig
) -> tuple[np.ndarray, AugmentationPlan]:
    """Full augmentation pipeline for one (sample, seed); returns the plan too."""
    clip = corpus.clip(sample_id)
    plan = derive_plan(
        seed,
        clip_samples=len(clip),
        frames=frame_count(len(clip), cfg),
        bands=cfg.num_mel_bands,
        corpus_size=len(corpus),
        cfg=cfg,
    )
    spec = _augmented_single(clip, plan, cfg)
    if plan.mixup_enabled:
        partner_clip = corpus.clip(plan.mixup_partner)
        partner_plan = derive_plan(
            seed,
            clip_samples=len(partner_clip),
            frames=frame_count(len(partner_clip), cfg),
            bands=cfg.num_mel_bands,
            corpus_size=len(corpus),
            cfg=cfg,
            partner_streams=True,
        )
        partner_spec = _augmented_single(partner_clip, partner_plan, cfg)
        spec = mixup_blend(spec, partner_spec, plan.mixup_lambda)
    return spec, plan


def replay_augmented(sample_id: int, seed: int, corpus: Corpus, cfg: FeatureConfig) -> np.ndarray:
    """Reproduce the augmented spectrogram generated under this seed."""
    spec, _ = augmented_spectrogram(sample_id, seed, corpus, cfg)
    return spec
