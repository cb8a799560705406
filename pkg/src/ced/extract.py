"""Logit extraction: run the teacher over seeded augmented views and fill a store.

Also home to the store-side metadata (feature-config hash, teacher
construction parameters), the per-slot spectrogram digests used by
verification, and the verification pass itself.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import FeatureConfig, config_hash
from .corpus import Corpus
from .features import log_mel, replay_augmented
from .rng import StreamTag, derive_rng
from .store import (
    LogitRecord,
    LogitStoreReader,
    StoreHeader,
    compress_topk,
    create_store,
    records_equal,
)
from .teacher import TeacherEnsemble, teacher_predict


class ExtractionError(RuntimeError):
    pass


class ConfigMismatchError(RuntimeError):
    pass


def meta_path(store_path: str | Path) -> Path:
    return Path(str(store_path) + ".meta")


def digests_path(store_path: str | Path) -> Path:
    return Path(str(store_path) + ".digests")


@dataclass(frozen=True)
class StoreMeta:
    config_hash: str
    teacher_seed: int
    teacher_members: int
    teacher_aug: bool

    def write(self, store_path: str | Path) -> None:
        lines = [
            f"config_hash = {self.config_hash}",
            f"teacher_seed = {self.teacher_seed}",
            f"teacher_members = {self.teacher_members}",
            f"teacher_aug = {int(self.teacher_aug)}",
        ]
        meta_path(store_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, store_path: str | Path) -> "StoreMeta":
        path = meta_path(store_path)
        if not path.exists():
            raise ExtractionError(f"store metadata not found: {path}")
        values: dict[str, str] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
        try:
            return cls(
                config_hash=values["config_hash"],
                teacher_seed=int(values["teacher_seed"]),
                teacher_members=int(values["teacher_members"]),
                teacher_aug=bool(int(values.get("teacher_aug", "1"))),
            )
        except KeyError as exc:
            raise ExtractionError(f"store metadata missing field {exc}") from exc


def check_config_hash(store_path: str | Path, cfg: FeatureConfig) -> None:
    meta = StoreMeta.read(store_path)
    actual = config_hash(cfg)
    if meta.config_hash != actual:
        raise ConfigMismatchError(
            f"feature config hash {actual} does not match the store's {meta.config_hash}; "
            "replaying with a drifted config would break input consistency"
        )


def spectrogram_digest(spec: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(spec, dtype="<f8").tobytes()).hexdigest()


def write_digests(store_path: str | Path, digests: list[str]) -> None:
    digests_path(store_path).write_text("\n".join(digests) + "\n", encoding="utf-8")


def read_digests(store_path: str | Path) -> list[str] | None:
    path = digests_path(store_path)
    if not path.exists():
        return None
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def teacher_input(
    sample_id: int, seed: int, corpus: Corpus, cfg: FeatureConfig, teacher_aug: bool
) -> np.ndarray:
    if teacher_aug:
        return replay_augmented(sample_id, seed, corpus, cfg)
    return log_mel(corpus.clip(sample_id), cfg)


def extract_logits(
    corpus: Corpus,
    teacher: TeacherEnsemble,
    cfg: FeatureConfig,
    top_k: int,
    stored_epochs: int,
    store_path: str | Path,
    seed: int = 0,
    teacher_aug: bool = True,
    threads: int = 1,
    keep_digests: bool = True,
) -> StoreHeader:
    """Fill a store with one record per (sample, stored epoch).

    Per-slot augmentation seeds are drawn from one extraction stream in
    epoch-major order, so identical inputs always produce byte-identical
    stores. Worker threads only compute records; appends happen in slot
    order from the single writer.
    """
    header = StoreHeader(
        num_samples=len(corpus),
        num_classes=teacher.num_classes,
        top_k=top_k,
        stored_epochs=stored_epochs,
    )
    header.validate()

    seed_stream = derive_rng(seed, StreamTag.EXTRACTION_SEEDS)
    slot_seeds = [
        [seed_stream.next_u32() for _ in range(header.num_samples)] for _ in range(stored_epochs)
    ]

    def build(epoch: int, sample_id: int) -> tuple[LogitRecord, str]:
        slot_seed = slot_seeds[epoch][sample_id]
        spec = teacher_input(sample_id, slot_seed, corpus, cfg, teacher_aug)
        values, indices = compress_topk(teacher_predict(spec, teacher), top_k)
        return LogitRecord(values=values, indices=indices, seed=slot_seed), spectrogram_digest(spec)

    digests: list[str] = []
    with create_store(store_path, header) as writer:
        for epoch in range(stored_epochs):
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    results = list(pool.map(lambda i: build(epoch, i), range(header.num_samples)))
            else:
                results = [build(epoch, i) for i in range(header.num_samples)]
            for sample_id, (record, digest) in enumerate(results):
                writer.append_record(sample_id, epoch, record)
                digests.append(digest)

    if keep_digests:
        write_digests(store_path, digests)
    StoreMeta(
        config_hash=config_hash(cfg),
        teacher_seed=teacher.seed,
        teacher_members=teacher.num_members,
        teacher_aug=teacher_aug,
    ).write(store_path)
    return header


@dataclass
class VerifyFailure:
    sample_id: int
    epoch: int
    reason: str


@dataclass
class VerifyReport:
    checked: list[tuple[int, int]]
    failures: list[VerifyFailure]

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_store(
    store: LogitStoreReader,
    corpus: Corpus,
    teacher: TeacherEnsemble,
    cfg: FeatureConfig,
    sample_count: int | None = None,
    seed: int = 0,
) -> VerifyReport:
    """Re-run extraction on a subset of slots and compare against the store.

    Every checked slot is re-augmented from its stored seed; the replayed
    spectrogram is compared bit for bit against the extraction-time digest
    (when digests were kept) and the recomputed record must match the
    stored one field-exactly.
    """
    header = store.header
    meta = StoreMeta.read(store.path)
    digests = read_digests(store.path)
    all_slots = [(s, e) for e in range(header.stored_epochs) for s in range(header.num_samples)]
    if sample_count is None or sample_count >= len(all_slots):
        slots = all_slots
    else:
        picker = derive_rng(seed, StreamTag.VERIFY_SAMPLING)
        slots = [all_slots[picker.next_below(len(all_slots))] for _ in range(sample_count)]

    failures: list[VerifyFailure] = []
    for sample_id, epoch in slots:
        try:
            stored = store.read_record(sample_id, epoch)
        except Exception as exc:
            failures.append(VerifyFailure(sample_id, epoch, f"unreadable record: {exc}"))
            continue
        spec = teacher_input(sample_id, stored.seed, corpus, cfg, meta.teacher_aug)
        if digests is not None:
            slot = epoch * header.num_samples + sample_id
            if spectrogram_digest(spec) != digests[slot]:
                failures.append(
                    VerifyFailure(sample_id, epoch, "replayed spectrogram differs from extraction time")
                )
        values, indices = compress_topk(teacher_predict(spec, teacher), header.top_k)
        recomputed = LogitRecord(values=values, indices=indices, seed=stored.seed)
        if not records_equal(stored, recomputed):
            failures.append(VerifyFailure(sample_id, epoch, "stored record differs from re-extraction"))
    return VerifyReport(checked=slots, failures=failures)
