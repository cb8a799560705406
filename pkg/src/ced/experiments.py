"""Desk-scale experiments: the consistency ablation grid and the top-k sweep.

Both experiments share one protocol per seed: generate a synthetic task,
build a label-correlated ensemble teacher, extract a store, train a
student purely from the store, and score macro mAP against the held-out
generative labels. Arms within a seed share the task and teacher so the
comparison is paired.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from statistics import median

import numpy as np

from .config import FeatureConfig
from .corpus import Corpus
from .extract import extract_logits
from .features import log_mel
from .metrics import mean_average_precision
from .model import StudentModel
from .store import open_store
from .synth import SyntheticTask, SyntheticTaskConfig, build_signal_teacher, generate_task
from .teacher import pool_spectrogram
from .train import TrainingConfig, train

# Calibrated desk-scale defaults. The consistency contrast needs the
# clean-trained arm to overfit, so the train split is smaller than the
# feature dimension, the store holds many distinct augmented views to cycle
# over, and training runs long enough for the clean fit to interpolate its
# few points. Mask maxima are scaled to one-second clips so a mask never
# swallows a whole axis.
DESK_FEATURE_CONFIG = FeatureConfig(max_time_mask=32, max_freq_mask=12, mixup="off")

DESK_TASK_CONFIG = SyntheticTaskConfig(num_train=40)

# The top-k sweep instead needs records where truncation discards real
# information: dense labels put many true positives per clip, so small k
# drops most of them while larger k keeps them.
KSWEEP_TASK_CONFIG = SyntheticTaskConfig(
    num_train=40, label_prob=0.3, tone_amp_min=0.1, tone_amp_max=0.5, noise_rms=0.03
)

DESK_TRAINING = TrainingConfig(epochs=160, batch_size=16, peak_lr=0.05, warmup_steps=30)

DESK_STORED_EPOCHS = 10

ARMS = (
    ("clean_teacher/clean_student", False, False),
    ("clean_teacher/augmented_student", False, True),
    ("augmented_teacher/clean_student", True, False),
    ("augmented_teacher/replayed_student", True, True),
)


@dataclass
class ArmOutcome:
    name: str
    teacher_aug: bool
    student_aug: bool
    eval_map: float


def _eval_scores(student: StudentModel, eval_corpus: Corpus, cfg: FeatureConfig) -> np.ndarray:
    rows = [
        student.predict_from_features(pool_spectrogram(log_mel(eval_corpus.clip(i), cfg)))
        for i in range(len(eval_corpus))
    ]
    return np.stack(rows)


def run_arm(
    task: SyntheticTask,
    workdir: Path,
    teacher_aug: bool,
    student_aug: bool,
    seed: int,
    feature_cfg: FeatureConfig = DESK_FEATURE_CONFIG,
    training: TrainingConfig = DESK_TRAINING,
    top_k: int = 20,
    stored_epochs: int = DESK_STORED_EPOCHS,
    teacher_kwargs: dict | None = None,
) -> ArmOutcome:
    """One extraction plus training run for a single grid cell."""
    workdir.mkdir(parents=True, exist_ok=True)
    corpus = Corpus.open(task.train_dir, sample_rate=task.cfg.sample_rate)
    teacher = build_signal_teacher(task.cfg, feature_cfg, seed=seed, **(teacher_kwargs or {}))
    store_path = workdir / f"arm_t{int(teacher_aug)}_s{int(student_aug)}.ced"
    extract_logits(
        corpus,
        teacher,
        feature_cfg,
        top_k=top_k,
        stored_epochs=stored_epochs,
        store_path=store_path,
        seed=seed,
        teacher_aug=teacher_aug,
        keep_digests=False,
    )

    if not student_aug:
        input_mode = "clean"
    elif teacher_aug:
        input_mode = "replay"
    else:
        input_mode = "independent"

    student = StudentModel(task.cfg.num_classes, feature_cfg.num_mel_bands)
    reader = open_store(store_path)
    train(reader, corpus, student, feature_cfg, replace(training, seed=seed), input_mode=input_mode)

    eval_corpus = Corpus.open(task.eval_dir, sample_rate=task.cfg.sample_rate)
    scores = _eval_scores(student, eval_corpus, feature_cfg)
    result = mean_average_precision(scores, task.eval_labels)
    name = next(n for n, t, s in ARMS if (t, s) == (teacher_aug, student_aug))
    return ArmOutcome(name=name, teacher_aug=teacher_aug, student_aug=student_aug, eval_map=result.mean_ap)


def consistency_experiment(
    workdir: str | Path,
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    task_cfg: SyntheticTaskConfig = DESK_TASK_CONFIG,
    feature_cfg: FeatureConfig = DESK_FEATURE_CONFIG,
    training: TrainingConfig = DESK_TRAINING,
    top_k: int = 20,
    stored_epochs: int = DESK_STORED_EPOCHS,
) -> dict:
    """Cross the teacher/student augmentation grid; returns per-arm mAP lists.

    The returned dict maps arm name to the list of per-seed eval mAPs plus
    a "median" sub-dict for convenience.
    """
    workdir = Path(workdir)
    per_arm: dict[str, list[float]] = {name: [] for name, _, _ in ARMS}
    for seed in seeds:
        task = generate_task(workdir / f"task_{seed}", replace(task_cfg, seed=seed))
        for name, teacher_aug, student_aug in ARMS:
            outcome = run_arm(
                task,
                workdir / f"run_{seed}",
                teacher_aug,
                student_aug,
                seed=seed,
                feature_cfg=feature_cfg,
                training=training,
                top_k=top_k,
                stored_epochs=stored_epochs,
            )
            per_arm[name].append(outcome.eval_map)
    return {
        "arms": per_arm,
        "median": {name: median(values) for name, values in per_arm.items()},
    }


def k_sweep(
    workdir: str | Path,
    top_ks: tuple[int, ...] = (1, 5, 20, 24),
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    task_cfg: SyntheticTaskConfig = KSWEEP_TASK_CONFIG,
    feature_cfg: FeatureConfig = DESK_FEATURE_CONFIG,
    training: TrainingConfig = DESK_TRAINING,
    stored_epochs: int = DESK_STORED_EPOCHS,
) -> dict:
    """Consistent-teaching runs across top-k values; also reports store sizes."""
    workdir = Path(workdir)
    per_k: dict[int, list[float]] = {k: [] for k in top_ks}
    store_sizes: dict[int, int] = {}
    for seed in seeds:
        task = generate_task(workdir / f"task_{seed}", replace(task_cfg, seed=seed))
        for k in top_ks:
            rundir = workdir / f"run_{seed}_k{k}"
            outcome = run_arm(
                task,
                rundir,
                teacher_aug=True,
                student_aug=True,
                seed=seed,
                feature_cfg=feature_cfg,
                training=training,
                top_k=k,
                stored_epochs=stored_epochs,
            )
            per_k[k].append(outcome.eval_map)
            store_sizes[k] = (rundir / "arm_t1_s1.ced").stat().st_size
    return {
        "per_k": per_k,
        "median": {k: median(v) for k, v in per_k.items()},
        "store_sizes": store_sizes,
    }
