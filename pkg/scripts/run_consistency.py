#!/usr/bin/env python3
"""Run the teacher/student augmentation grid and print per-arm eval mAP."""

import argparse
import json
from pathlib import Path

from ced.experiments import consistency_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = parser.parse_args()

    result = consistency_experiment(Path(args.workdir), seeds=tuple(args.seeds))
    print(f"{'arm':44s} per-seed mAP{'':24s} median")
    for name, values in result["arms"].items():
        row = " ".join(f"{v:.3f}" for v in values)
        print(f"{name:44s} {row:36s} {result['median'][name]:.3f}")
    out = Path(args.workdir) / "consistency_results.json"
    out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(f"written: {out}")


if __name__ == "__main__":
    main()
