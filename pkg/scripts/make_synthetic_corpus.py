#!/usr/bin/env python3
"""Generate a synthetic multilabel tone corpus (train + eval splits)."""

import argparse
from pathlib import Path

from ced.synth import SyntheticTaskConfig, generate_task


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="task root directory")
    parser.add_argument("--classes", type=int, default=24)
    parser.add_argument("--train-samples", type=int, default=160)
    parser.add_argument("--eval-samples", type=int, default=240)
    parser.add_argument("--clip-seconds", type=float, default=1.0)
    parser.add_argument("--label-prob", type=float, default=0.1)
    parser.add_argument("--noise-rms", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cfg = SyntheticTaskConfig(
        num_classes=args.classes,
        num_train=args.train_samples,
        num_eval=args.eval_samples,
        clip_seconds=args.clip_seconds,
        label_prob=args.label_prob,
        noise_rms=args.noise_rms,
        seed=args.seed,
    )
    task = generate_task(Path(args.out), cfg)
    print(f"train corpus: {task.train_dir} ({cfg.num_train} clips)")
    print(f"eval corpus:  {task.eval_dir} ({cfg.num_eval} clips)")
    print(f"eval labels:  {task.eval_labels_path}")


if __name__ == "__main__":
    main()
