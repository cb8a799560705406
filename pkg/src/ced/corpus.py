"""Directory-of-WAVs corpus with stable integer sample ids.

Sample ids come from the lexicographic order of the file names, pinned by
an index file written next to the audio. A store keyed by sample id stays
valid as long as the index file is kept with the corpus.
"""

from __future__ import annotations

import os
from pathlib import Path

from .audio import AudioClip, read_wav

INDEX_FILENAME = "index.txt"


class CorpusError(RuntimeError):
    pass


class Corpus:
    def __init__(self, root: Path, names: list[str], sample_rate: int) -> None:
        self.root = Path(root)
        self.names = names
        self.sample_rate = sample_rate
        self._cache: dict[int, AudioClip] = {}

    @classmethod
    def open(cls, root: str | Path, sample_rate: int = 16000, write_index: bool = True) -> "Corpus":
        root = Path(root)
        if not root.is_dir():
            raise CorpusError(f"corpus directory not found: {root}")
        index_path = root / INDEX_FILENAME
        if index_path.exists():
            names = [line.strip() for line in index_path.read_text(encoding="utf-8").splitlines() if line.strip()]
        else:
            names = sorted(p.name for p in root.iterdir() if p.suffix.lower() == ".wav")
            if write_index:
                index_path.write_text("\n".join(names) + "\n", encoding="utf-8")
        if not names:
            raise CorpusError(f"no WAV files under {root}")
        return cls(root, names, sample_rate)

    def __len__(self) -> int:
        return len(self.names)

    def path(self, sample_id: int) -> Path:
        self._check_id(sample_id)
        return self.root / self.names[sample_id]

    def clip(self, sample_id: int) -> AudioClip:
        self._check_id(sample_id)
        cached = self._cache.get(sample_id)
        if cached is None:
            path = self.path(sample_id)
            if not path.exists():
                raise CorpusError(f"missing corpus sample: {path}")
            cached = read_wav(os.fspath(path), expected_rate=self.sample_rate)
            self._cache[sample_id] = cached
        return cached

    def _check_id(self, sample_id: int) -> None:
        if not 0 <= sample_id < len(self.names):
            raise CorpusError(f"sample_id {sample_id} out of range [0, {len(self.names)})")
