"""Feature-extraction configuration shared by logit extraction and replay.

The whole point of storing augmentation seeds is that the student can
re-create the teacher's input bit for bit. That only holds when both
phases run the exact same feature configuration, so the config is a
frozen dataclass with a stable hash that gets recorded next to every
logit store and checked before training.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

MIXUP_MODES = ("off", "beta", "fixed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    sample_rate: int = 16000
    num_mel_bands: int = 64
    window_samples: int = 512
    hop_samples: int = 160
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0
    log_floor: float = 1e-10
    max_time_mask: int = 192
    max_freq_mask: int = 24
    max_shift_fraction: float = 1.0
    mixup: str = "off"

    def __post_init__(self) -> None:
        if self.sample_rate <= 0 or self.window_samples <= 0 or self.hop_samples <= 0:
            raise ConfigError("sample_rate, window_samples and hop_samples must be positive")
        if self.num_mel_bands <= 0:
            raise ConfigError("num_mel_bands must be positive")
        if not 0.0 <= self.fmin_hz < self.fmax_hz:
            raise ConfigError("need 0 <= fmin_hz < fmax_hz")
        if self.fmax_hz > self.sample_rate / 2:
            raise ConfigError("fmax_hz exceeds the Nyquist frequency")
        if self.log_floor <= 0.0:
            raise ConfigError("log_floor must be positive")
        if self.max_time_mask < 0 or self.max_freq_mask < 0:
            raise ConfigError("mask maxima must be non-negative")
        if not 0.0 <= self.max_shift_fraction <= 1.0:
            raise ConfigError("max_shift_fraction must lie in [0, 1]")
        if self.mixup not in MIXUP_MODES:
            raise ConfigError(f"mixup must be one of {MIXUP_MODES}, got {self.mixup!r}")

    @property
    def mixup_enabled(self) -> bool:
        return self.mixup != "off"


_FIELD_PARSERS = {
    "sample_rate": int,
    "num_mel_bands": int,
    "window_samples": int,
    "hop_samples": int,
    "fmin_hz": float,
    "fmax_hz": float,
    "log_floor": float,
    "max_time_mask": int,
    "max_freq_mask": int,
    "max_shift_fraction": float,
    "mixup": str,
}


def config_lines(cfg: FeatureConfig) -> list[str]:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value!r}" if isinstance(value, str) else f"{f.name} = {value}")
    return lines


def config_hash(cfg: FeatureConfig) -> str:
    """Stable hex digest of every field, used to gate extract/train pairing."""
    canonical = "\n".join(sorted(config_lines(cfg)))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_config(cfg: FeatureConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(config_lines(cfg)) + "\n")


def load_config(path: str) -> FeatureConfig:
    """Parse a key = value config file; unknown keys are rejected."""
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            parser = _FIELD_PARSERS[key]
            if parser is str:
                values[key] = text.strip("'\"")
            else:
                try:
                    values[key] = parser(text)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {text!r}") from exc
    return replace(FeatureConfig(), **values)
