"""Command-line front door: extract, train, inspect, verify, replay.

Exit codes are a stable scripting contract: 0 success, 1 runtime failure,
2 usage or validation error. Every mutating subcommand writes a manifest
next to its outputs so a run can be reproduced from the manifest alone.
The replay subcommand exists for out-of-process consumers (bindings in
other languages) that need bit-identical spectrograms and targets.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, FeatureConfig, config_hash, load_config, save_config
from .corpus import Corpus, CorpusError
from .extract import (
    ConfigMismatchError,
    ExtractionError,
    StoreMeta,
    check_config_hash,
    extract_logits,
    verify_store,
)
from .features import replay_augmented
from .losses import record_target
from .model import StudentModel
from .store import StoreFormatError, estimate_storage, open_store
from .teacher import TeacherEnsemble
from .train import TrainingConfig, train, write_history_csv

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

log = logging.getLogger("ced")


class UsageError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("CED_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


def _load_feature_config(path: str | None, mixup: str | None) -> FeatureConfig:
    cfg = load_config(path) if path else FeatureConfig()
    if mixup is not None:
        cfg = replace(cfg, mixup=mixup)
    return cfg


def _write_manifest(out_dir: Path, command: str, fields: dict) -> None:
    manifest = {"command": command, "tool_version": __version__, **fields}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _megabytes(num_bytes: int) -> str:
    return f"{num_bytes / 1e6:.1f} MB ({num_bytes / 2**20:.1f} MiB)"


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _load_feature_config(args.config, args.mixup)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    store_path = Path(args.store) if args.store else out_dir / "logits.ced"
    corpus = Corpus.open(args.corpus, sample_rate=cfg.sample_rate)
    if args.top_k > args.classes:
        raise UsageError(f"--top-k {args.top_k} exceeds --classes {args.classes}")
    teacher = TeacherEnsemble(
        num_classes=args.classes,
        feature_dim=cfg.num_mel_bands,
        num_members=args.teacher_members,
        seed=args.teacher_seed,
    )
    header = extract_logits(
        corpus,
        teacher,
        cfg,
        top_k=args.top_k,
        stored_epochs=args.stored_epochs,
        store_path=store_path,
        seed=args.seed,
        threads=args.threads,
        keep_digests=not args.no_digests,
    )
    save_config(cfg, str(out_dir / "feature_config.txt"))
    _write_manifest(
        out_dir,
        "extract",
        {
            "store": str(store_path),
            "corpus": str(Path(args.corpus)),
            "config_hash": config_hash(cfg),
            "seed": args.seed,
            "teacher_seed": args.teacher_seed,
            "top_k": args.top_k,
            "stored_epochs": args.stored_epochs,
            "classes": args.classes,
        },
    )
    print(
        f"extracted {header.slot_count} records "
        f"({header.num_samples} samples x {header.stored_epochs} epochs) to {store_path}"
    )
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    store_path = Path(args.store)
    default_config = store_path.parent / "feature_config.txt"
    config_arg = args.config or (str(default_config) if default_config.exists() else None)
    cfg = _load_feature_config(config_arg, None)
    check_config_hash(store_path, cfg)

    reader = open_store(store_path)
    corpus = Corpus.open(args.corpus, sample_rate=cfg.sample_rate)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    student = StudentModel(reader.header.num_classes, cfg.num_mel_bands)
    training = TrainingConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        peak_lr=args.peak_lr,
        warmup_steps=args.warmup_steps,
        seed=args.seed,
    )
    history = train(reader, corpus, student, cfg, training, threads=args.threads)
    model_path = out_dir / "model.bin"
    student.save(model_path)
    write_history_csv(history, out_dir / "loss_history.csv")
    _write_manifest(
        out_dir,
        "train",
        {
            "store": str(store_path),
            "corpus": str(Path(args.corpus)),
            "config_hash": config_hash(cfg),
            "seed": args.seed,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
        },
    )
    final_loss = history[-1].loss if history else float("nan")
    print(f"trained {args.epochs} epochs, final loss {final_loss:.6f}, model at {model_path}")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    reader = open_store(args.store)
    h = reader.header
    per_epoch_topk = estimate_storage(h.num_samples, h.num_classes, h.top_k, "topk")
    per_epoch_naive = estimate_storage(h.num_samples, h.num_classes, h.top_k, "naive-f32")
    per_epoch_f16 = estimate_storage(h.num_samples, h.num_classes, h.top_k, "dense-f16")
    report = {
        "store": str(reader.path),
        "format_version": h.version,
        "num_samples": h.num_samples,
        "num_classes": h.num_classes,
        "top_k": h.top_k,
        "stored_epochs": h.stored_epochs,
        "bytes_per_record": h.record_size,
        "bytes_per_epoch": per_epoch_topk,
        "total_bytes": h.file_size,
        "naive_f32_bytes_per_epoch": per_epoch_naive,
        "dense_f16_bytes_per_epoch": per_epoch_f16,
    }
    if args.json:
        print(json.dumps(report, sort_keys=True, indent=2))
        return EXIT_OK
    print(f"store            {reader.path}")
    print(f"format version   {h.version}")
    print(f"samples          {h.num_samples}")
    print(f"classes          {h.num_classes}")
    print(f"top-k            {h.top_k}")
    print(f"stored epochs    {h.stored_epochs}")
    print(f"bytes/record     {h.record_size}")
    print(f"bytes/epoch      {per_epoch_topk}  = {_megabytes(per_epoch_topk)}")
    print(f"total file size  {h.file_size}  = {_megabytes(h.file_size)}")
    print("per-epoch comparison:")
    print(f"  naive float32  {per_epoch_naive}  = {_megabytes(per_epoch_naive)}")
    print(f"  dense float16  {per_epoch_f16}  = {_megabytes(per_epoch_f16)}")
    print(f"  top-k stored   {per_epoch_topk}  = {_megabytes(per_epoch_topk)}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    store_path = Path(args.store)
    default_config = store_path.parent / "feature_config.txt"
    config_arg = args.config or (str(default_config) if default_config.exists() else None)
    cfg = _load_feature_config(config_arg, None)
    check_config_hash(store_path, cfg)

    reader = open_store(store_path)
    meta = StoreMeta.read(store_path)
    corpus = Corpus.open(args.corpus, sample_rate=cfg.sample_rate)
    teacher = TeacherEnsemble(
        num_classes=reader.header.num_classes,
        feature_dim=cfg.num_mel_bands,
        num_members=meta.teacher_members,
        seed=meta.teacher_seed,
    )
    report = verify_store(reader, corpus, teacher, cfg, sample_count=args.samples, seed=args.seed)
    print(f"checked {len(report.checked)} (sample, epoch) slots")
    if report.passed:
        print("verify: PASS")
        return EXIT_OK
    for failure in report.failures:
        print(f"verify: FAIL sample={failure.sample_id} epoch={failure.epoch}: {failure.reason}")
    return EXIT_RUNTIME


def _parse_slots(args: argparse.Namespace, header) -> list[tuple[int, int]]:
    slots: list[tuple[int, int]] = []
    if args.slots:
        for lineno, raw in enumerate(Path(args.slots).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise UsageError(f"{args.slots}:{lineno}: expected 'sample epoch', got {line!r}")
            slots.append((int(parts[0]), int(parts[1])))
    elif args.sample is not None and args.epoch is not None:
        slots.append((args.sample, args.epoch))
    else:
        raise UsageError("replay needs either --slots FILE or both --sample and --epoch")
    for sample_id, epoch in slots:
        if not (0 <= sample_id < header.num_samples and 0 <= epoch < header.stored_epochs):
            raise UsageError(f"slot ({sample_id}, {epoch}) out of range for this store")
    return slots


def _save_npy(path: Path, array: np.ndarray) -> None:
    np.save(path, np.ascontiguousarray(array, dtype="<f8"))


def cmd_replay(args: argparse.Namespace) -> int:
    store_path = Path(args.store)
    default_config = store_path.parent / "feature_config.txt"
    config_arg = args.config or (str(default_config) if default_config.exists() else None)
    cfg = _load_feature_config(config_arg, None)
    check_config_hash(store_path, cfg)

    reader = open_store(store_path)
    corpus = Corpus.open(args.corpus, sample_rate=cfg.sample_rate)
    slots = _parse_slots(args, reader.header)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for sample_id, epoch in slots:
        record = reader.read_record(sample_id, epoch)
        spec = replay_augmented(sample_id, record.seed, corpus, cfg)
        target = record_target(record, reader.header.num_classes)
        stem = f"{sample_id:06d}_{epoch:04d}"
        _save_npy(out_dir / f"spec_{stem}.npy", spec)
        _save_npy(out_dir / f"target_{stem}.npy", target)
        payload = {
            "sample_id": sample_id,
            "epoch": epoch,
            "seed": record.seed,
            "indices": [int(i) for i in record.indices],
            "value_bits": [int(b) for b in record.values.astype("<f2").view("<u2")],
            "values": [float(v) for v in record.values],
        }
        (out_dir / f"record_{stem}.json").write_text(json.dumps(payload, sort_keys=True) + "\n")
    print(f"replayed {len(slots)} slots into {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ced", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="run the teacher over seeded augmented views and fill a store")
    p_extract.add_argument("--corpus", required=True)
    p_extract.add_argument("--out", required=True)
    p_extract.add_argument("--store", default=None, help="store path (default: <out>/logits.ced)")
    p_extract.add_argument("--config", default=None, help="feature config file (default: built-in)")
    p_extract.add_argument("--top-k", type=int, default=20)
    p_extract.add_argument("--stored-epochs", type=int, default=1)
    p_extract.add_argument("--classes", type=int, default=24)
    p_extract.add_argument("--teacher-members", type=int, default=5)
    p_extract.add_argument("--teacher-seed", type=int, default=0)
    p_extract.add_argument("--seed", type=int, default=0)
    p_extract.add_argument("--threads", type=int, default=1)
    p_extract.add_argument("--mixup", choices=("off", "beta", "fixed"), default=None)
    p_extract.add_argument("--no-digests", action="store_true", help="skip the spectrogram digest side file")
    p_extract.set_defaults(func=cmd_extract)

    p_train = sub.add_parser("train", help="train a student from a finalized store")
    p_train.add_argument("--store", required=True)
    p_train.add_argument("--corpus", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--config", default=None, help="feature config file (default: next to the store)")
    p_train.add_argument("--epochs", type=int, default=30)
    p_train.add_argument("--batch-size", type=int, default=16)
    p_train.add_argument("--peak-lr", type=float, default=0.02)
    p_train.add_argument("--warmup-steps", type=int, default=20)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--threads", type=int, default=1)
    p_train.set_defaults(func=cmd_train)

    p_inspect = sub.add_parser("inspect", help="print header fields and storage arithmetic")
    p_inspect.add_argument("--store", required=True)
    p_inspect.add_argument("--json", action="store_true")
    p_inspect.set_defaults(func=cmd_inspect)

    p_verify = sub.add_parser("verify", help="re-extract a subset of slots and compare")
    p_verify.add_argument("--store", required=True)
    p_verify.add_argument("--corpus", required=True)
    p_verify.add_argument("--config", default=None)
    p_verify.add_argument("--samples", type=int, default=None, help="slots to check (default: all)")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    p_replay = sub.add_parser("replay", help="dump replayed spectrograms, targets and records")
    p_replay.add_argument("--store", required=True)
    p_replay.add_argument("--corpus", required=True)
    p_replay.add_argument("--config", default=None)
    p_replay.add_argument("--sample", type=int, default=None)
    p_replay.add_argument("--epoch", type=int, default=None)
    p_replay.add_argument("--slots", default=None, help="file of 'sample epoch' lines")
    p_replay.add_argument("--out-dir", required=True)
    p_replay.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, ConfigMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        StoreFormatError,
        CorpusError,
        ExtractionError,
        OSError,
        ValueError,
        RuntimeError,
    ) as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
