"""Learning-rate schedule: linear warmup into a cosine decay.

The ramp runs 0 -> peak over warmup_steps, then the cosine takes the rate
from peak at step == warmup_steps down to peak * final_lr_fraction at the
last step (total_steps - 1).
"""

from __future__ import annotations

import math


def lr_schedule(
    step: int,
    *,
    peak_lr: float,
    warmup_steps: int,
    total_steps: int,
    final_lr_fraction: float = 0.1,
) -> float:
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if warmup_steps < 0:
        raise ValueError(f"warmup_steps must be >= 0, got {warmup_steps}")
    if not 0.0 < final_lr_fraction <= 1.0:
        raise ValueError(f"final_lr_fraction must lie in (0, 1], got {final_lr_fraction}")

    if warmup_steps > 0 and step < warmup_steps:
        return peak_lr * step / warmup_steps

    last_step = total_steps - 1
    floor = peak_lr * final_lr_fraction
    if last_step <= warmup_steps:
        return peak_lr if step <= warmup_steps else floor
    progress = min(1.0, (step - warmup_steps) / (last_step - warmup_steps))
    # Boundary values are contractual: exactly peak at the end of warmup,
    # exactly the floor at the final step.
    if progress == 0.0:
        return peak_lr
    if progress == 1.0:
        return floor
    return floor + (peak_lr - floor) * 0.5 * (1.0 + math.cos(math.pi * progress))
