"""Compact binary store of top-k teacher probabilities and augmentation seeds.

File layout (all little-endian, no timestamps, byte-identical across runs):

    header, 24 bytes:
        magic   4 bytes  'CEDS'
        u16     format version (currently 1)
        u16     reserved, written as 0
        u64     num_samples
        u32     num_classes
        u16     top_k
        u16     stored_epochs
    records, stored_epochs * num_samples entries of 4*top_k + 4 bytes each,
    epoch-major then sample-major:
        top_k * binary16   probabilities, sorted non-increasing
        top_k * u16        class indices, pairwise distinct
        u32                augmentation seed

A companion bitmap file `<store>.written` holds ceil(slots / 8) bytes,
bit (epoch * num_samples + sample) set LSB-first once that slot has been
written; it is what distinguishes a real all-zero record from an
untouched slot.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"CEDS"
FORMAT_VERSION = 1
HEADER_STRUCT = struct.Struct("<4sHHQIHH")
HEADER_SIZE = HEADER_STRUCT.size  # 24
MAX_CLASSES = 65536  # class indices must fit in a u16

STORAGE_MODES = ("naive-f32", "dense-f16", "topk")


class StoreFormatError(ValueError):
    pass


class MissingRecordError(KeyError):
    pass


def written_path(store_path: str | Path) -> Path:
    return Path(str(store_path) + ".written")


@dataclass(frozen=True)
class StoreHeader:
    num_samples: int
    num_classes: int
    top_k: int
    stored_epochs: int
    version: int = FORMAT_VERSION

    def validate(self) -> None:
        if self.num_samples < 1:
            raise StoreFormatError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.stored_epochs < 1:
            raise StoreFormatError(f"stored_epochs must be >= 1, got {self.stored_epochs}")
        if self.num_classes > MAX_CLASSES:
            raise StoreFormatError(
                f"num_classes {self.num_classes} exceeds {MAX_CLASSES}; indices would not fit 16 bits"
            )
        if not 1 <= self.top_k <= self.num_classes:
            raise StoreFormatError(
                f"need 1 <= top_k <= num_classes, got top_k={self.top_k} num_classes={self.num_classes}"
            )

    @property
    def record_size(self) -> int:
        return 4 * self.top_k + 4

    @property
    def slot_count(self) -> int:
        return self.stored_epochs * self.num_samples

    @property
    def file_size(self) -> int:
        return HEADER_SIZE + self.slot_count * self.record_size

    def pack(self) -> bytes:
        return HEADER_STRUCT.pack(
            MAGIC, self.version, 0, self.num_samples, self.num_classes, self.top_k, self.stored_epochs
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "StoreHeader":
        if len(raw) < HEADER_SIZE:
            raise StoreFormatError("store file shorter than the header")
        magic, version, _reserved, n, c, k, e = HEADER_STRUCT.unpack(raw[:HEADER_SIZE])
        if magic != MAGIC:
            raise StoreFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != FORMAT_VERSION:
            raise StoreFormatError(f"unsupported format version {version}")
        header = cls(num_samples=n, num_classes=c, top_k=k, stored_epochs=e, version=version)
        header.validate()
        return header


@dataclass
class LogitRecord:
    """Per (sample, epoch) unit: top-k probabilities, their class ids, a seed."""

    values: np.ndarray
    indices: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)

    def validate(self, num_classes: int) -> None:
        if self.values.shape != self.indices.shape:
            raise StoreFormatError("values and indices must have the same length")
        if self.values.size == 0:
            raise StoreFormatError("record must hold at least one entry")
        if not 0 <= self.seed <= 0xFFFFFFFF:
            raise StoreFormatError(f"seed {self.seed} does not fit an unsigned 32-bit integer")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise StoreFormatError("probabilities must lie in [0, 1]")
        if np.any(self.indices < 0) or np.any(self.indices >= num_classes):
            raise StoreFormatError("class indices must lie in [0, num_classes)")
        if len(set(self.indices.tolist())) != self.indices.size:
            raise StoreFormatError("class indices must be pairwise distinct")
        dv = np.diff(self.values)
        if np.any(dv > 0.0):
            raise StoreFormatError("probabilities must be sorted non-increasing")
        # Equal neighbours must appear in ascending index order.
        ties = dv == 0.0
        if np.any(ties & (np.diff(self.indices) < 0)):
            raise StoreFormatError("tied probabilities must be ordered by ascending class index")


def compress_topk(probs: np.ndarray, top_k: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep the top_k largest probabilities with their class indices.

    Output is sorted by descending probability, ties broken by ascending
    class index, so the result is a deterministic function of the input.
    """
    dense = np.asarray(probs, dtype=np.float64).reshape(-1)
    if top_k > dense.size:
        raise StoreFormatError(f"top_k={top_k} exceeds num_classes={dense.size}")
    # lexsort uses the last key as primary: descending value, then ascending index.
    order = np.lexsort((np.arange(dense.size), -dense))[:top_k]
    return dense[order].copy(), order.astype(np.int64)


def densify(record: LogitRecord, num_classes: int) -> np.ndarray:
    """Expand a record to a length num_classes vector, zero everywhere else."""
    if np.any(record.indices < 0) or np.any(record.indices >= num_classes):
        raise StoreFormatError("record indices out of range for the requested num_classes")
    dense = np.zeros(num_classes, dtype=np.float64)
    dense[record.indices] = record.values
    return dense


def estimate_storage(num_samples: int, num_classes: int, top_k: int, mode: str) -> int:
    """Bytes per stored epoch for a given layout, header excluded."""
    if num_samples <= 0 or num_classes <= 0 or top_k <= 0:
        raise ValueError("num_samples, num_classes and top_k must be positive")
    if mode == "naive-f32":
        return num_samples * num_classes * 4
    if mode == "dense-f16":
        return num_samples * num_classes * 2
    if mode == "topk":
        return num_samples * (4 * top_k + 4)
    raise ValueError(f"unknown storage mode {mode!r}, expected one of {STORAGE_MODES}")


def _pack_record(record: LogitRecord, top_k: int) -> bytes:
    values16 = record.values.astype("<f2")  # IEEE binary16, round-to-nearest-even
    indices16 = record.indices.astype("<u2")
    return values16.tobytes() + indices16.tobytes() + struct.pack("<I", record.seed)


def _unpack_record(raw: bytes, top_k: int) -> LogitRecord:
    values = np.frombuffer(raw, dtype="<f2", count=top_k, offset=0)
    indices = np.frombuffer(raw, dtype="<u2", count=top_k, offset=2 * top_k)
    (seed,) = struct.unpack_from("<I", raw, 4 * top_k)
    rec = LogitRecord(values=values.astype(np.float64), indices=indices.astype(np.int64), seed=seed)
    return rec


def records_equal(a: LogitRecord, b: LogitRecord) -> bool:
    """Field-exact equality at binary16 resolution (what the file stores)."""
    return (
        a.seed == b.seed
        and np.array_equal(a.indices, b.indices)
        and a.values.astype("<f2").tobytes() == b.values.astype("<f2").tobytes()
    )


class LogitStoreWriter:
    """Single-writer handle; the store becomes immutable after finalize()."""

    def __init__(self, path: str | Path, header: StoreHeader) -> None:
        header.validate()
        self.path = Path(path)
        self.header = header
        self._file = open(self.path, "wb")
        self._file.write(header.pack())
        self._file.truncate(header.file_size)  # zero-fill the record region
        self._bitmap = bytearray(math.ceil(header.slot_count / 8))
        self._finalized = False

    def append_record(self, sample_id: int, epoch: int, record: LogitRecord) -> None:
        if self._finalized:
            raise StoreFormatError("store already finalized")
        self._check_slot(sample_id, epoch)
        if record.values.size != self.header.top_k:
            raise StoreFormatError(
                f"record holds {record.values.size} entries, store expects top_k={self.header.top_k}"
            )
        record.validate(self.header.num_classes)
        slot = epoch * self.header.num_samples + sample_id
        self._file.seek(HEADER_SIZE + slot * self.header.record_size)
        self._file.write(_pack_record(record, self.header.top_k))
        self._bitmap[slot // 8] |= 1 << (slot % 8)

    def finalize(self) -> None:
        if self._finalized:
            return
        self._file.flush()
        self._file.close()
        written_path(self.path).write_bytes(bytes(self._bitmap))
        self._finalized = True

    def __enter__(self) -> "LogitStoreWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.finalize()

    def _check_slot(self, sample_id: int, epoch: int) -> None:
        if not 0 <= sample_id < self.header.num_samples:
            raise StoreFormatError(f"sample_id {sample_id} out of range [0, {self.header.num_samples})")
        if not 0 <= epoch < self.header.stored_epochs:
            raise StoreFormatError(f"epoch {epoch} out of range [0, {self.header.stored_epochs})")


def create_store(path: str | Path, header: StoreHeader) -> LogitStoreWriter:
    return LogitStoreWriter(path, header)


class LogitStoreReader:
    """Read-only store view; safe to share across threads."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        if not self.path.exists():
            raise StoreFormatError(f"store not found: {self.path}")
        with open(self.path, "rb") as f:
            head = f.read(HEADER_SIZE)
        self.header = StoreHeader.unpack(head)
        actual = self.path.stat().st_size
        if actual != self.header.file_size:
            raise StoreFormatError(
                f"corrupt store: file is {actual} bytes, header implies {self.header.file_size}"
            )
        self._data = np.memmap(self.path, dtype=np.uint8, mode="r")
        bp = written_path(self.path)
        self._bitmap = bp.read_bytes() if bp.exists() else None
        if self._bitmap is not None and len(self._bitmap) != math.ceil(self.header.slot_count / 8):
            raise StoreFormatError("corrupt store: written-bitmap size does not match the header")

    def is_written(self, sample_id: int, epoch: int) -> bool:
        slot = self._slot(sample_id, epoch)
        if self._bitmap is not None:
            return bool(self._bitmap[slot // 8] >> (slot % 8) & 1)
        # No bitmap: fall back to the all-zeros sentinel. All-zero bytes can
        # never be a legal multi-entry record (duplicate zero indices).
        return any(self._record_bytes(slot))

    def read_record(self, sample_id: int, epoch: int) -> LogitRecord:
        slot = self._slot(sample_id, epoch)
        if not self.is_written(sample_id, epoch):
            raise MissingRecordError(f"record (sample {sample_id}, epoch {epoch}) was never written")
        return _unpack_record(self._record_bytes(slot), self.header.top_k)

    def iter_epoch(self, epoch: int):
        for sample_id in range(self.header.num_samples):
            yield sample_id, self.read_record(sample_id, epoch)

    def _slot(self, sample_id: int, epoch: int) -> int:
        if not 0 <= sample_id < self.header.num_samples:
            raise StoreFormatError(f"sample_id {sample_id} out of range [0, {self.header.num_samples})")
        if not 0 <= epoch < self.header.stored_epochs:
            raise StoreFormatError(f"epoch {epoch} out of range [0, {self.header.stored_epochs})")
        return epoch * self.header.num_samples + sample_id

    def _record_bytes(self, slot: int) -> bytes:
        start = HEADER_SIZE + slot * self.header.record_size
        return bytes(self._data[start : start + self.header.record_size])


def open_store(path: str | Path) -> LogitStoreReader:
    return LogitStoreReader(path)
