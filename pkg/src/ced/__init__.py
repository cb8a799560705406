"""Consistent-teaching distillation tooling: compact top-k logit stores,
seed-replayable audio augmentation, and a label-free sparse-BCE trainer."""

__version__ = "0.1.0"
