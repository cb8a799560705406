#!/usr/bin/env python3
"""Sweep the stored top-k and report eval mAP against measured store size."""

import argparse
import json
from pathlib import Path

from ced.experiments import KSWEEP_TASK_CONFIG, k_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument(
        "--top-ks", type=int, nargs="+", default=[1, 5, 20, KSWEEP_TASK_CONFIG.num_classes]
    )
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = parser.parse_args()

    result = k_sweep(Path(args.workdir), top_ks=tuple(args.top_ks), seeds=tuple(args.seeds))
    print(f"{'k':>4s} {'median mAP':>11s} {'store bytes':>12s} {'bytes/record':>13s}")
    for k in args.top_ks:
        size = result["store_sizes"][k]
        print(f"{k:4d} {result['median'][k]:11.3f} {size:12d} {4 * k + 4:13d}")
    out = Path(args.workdir) / "k_sweep_results.json"
    out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(f"written: {out}")


if __name__ == "__main__":
    main()
