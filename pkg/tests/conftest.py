import numpy as np
import pytest

from ced.audio import write_wav
from ced.corpus import Corpus


def make_tone_corpus(directory, count, seconds=0.2, sample_rate=16000, seed=0):
    """Small corpus of noisy tones; enough structure for teachers to react to."""
    rng = np.random.default_rng(seed)
    directory.mkdir(parents=True, exist_ok=True)
    n = int(seconds * sample_rate)
    t = np.arange(n) / sample_rate
    for i in range(count):
        freq = rng.uniform(200.0, 6000.0)
        clip = 0.4 * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
        clip += rng.normal(0, 0.02, size=n)
        write_wav(str(directory / f"clip_{i:05d}.wav"), clip, sample_rate)
    return Corpus.open(directory, sample_rate=sample_rate)


@pytest.fixture
def tone_corpus(tmp_path):
    return make_tone_corpus(tmp_path / "corpus", count=8)
