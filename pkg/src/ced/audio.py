"""Reading and writing 16-bit PCM mono WAV clips."""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np


class AudioFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AudioClip:
    """Mono waveform with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __len__(self) -> int:
        return int(self.samples.shape[0])


def read_wav(path: str, expected_rate: int | None = None) -> AudioClip:
    """Load a mono 16-bit PCM WAV file.

    Anything else (stereo, 8/24/32 bit, wrong sample rate) is rejected;
    resampling is deliberately not supported.
    """
    with wave.open(path, "rb") as wav:
        channels = wav.getnchannels()
        width = wav.getsampwidth()
        rate = wav.getframerate()
        frames = wav.getnframes()
        if channels != 1:
            raise AudioFormatError(f"{path}: expected mono audio, got {channels} channels")
        if width != 2:
            raise AudioFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
        if expected_rate is not None and rate != expected_rate:
            raise AudioFormatError(f"{path}: expected {expected_rate} Hz, got {rate} Hz")
        raw = wav.readframes(frames)
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(samples=ints.astype(np.float64) / 32768.0, sample_rate=rate)


def write_wav(path: str, samples: np.ndarray, sample_rate: int) -> None:
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.round(clipped * 32767.0).astype("<i2")
    with wave.open(path, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(ints.tobytes())
