"""Deterministic pseudo-random streams for seed-replayable augmentation.

SplitMix64 is the stream generator of choice here: its whole state is a
single 64-bit integer, the update uses only shifts, xors and wrapping
multiplies (so it behaves identically on every platform), and independent
substreams can be formed by perturbing the seed. Each augmentation stage
owns its own stream tag, which keeps the draws of one stage stable when
another stage is toggled on or off.
"""

from __future__ import annotations

from enum import IntEnum

MASK64 = (1 << 64) - 1

# Weyl increment used both as the SplitMix64 gamma and as the stream-tag
# multiplier when deriving substream seeds.
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class StreamTag(IntEnum):
    """Reserved substream identifiers. One tag per independent consumer."""

    GENERAL = 0
    WAVE_SHIFT = 1
    SPEC_MASK = 2
    MIXUP = 3
    PARTNER_WAVE_SHIFT = 4
    PARTNER_SPEC_MASK = 5
    EXTRACTION_SEEDS = 16
    SAMPLE_ORDER = 17
    STUDENT_AUG = 18
    VERIFY_SAMPLING = 19


class SplitMix64:
    """Reference SplitMix64 sequence for a 64-bit seed."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def next_u32(self) -> int:
        return self.next_u64() & 0xFFFFFFFF

    def random(self) -> float:
        """Uniform float in [0, 1) built from the top 53 bits of one draw."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound).

        Uses plain modulo reduction; the bias is at most bound / 2**64,
        irrelevant for the small bounds used here, and the mapping is
        trivial to reproduce in any language.
        """
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return self.next_u64() % bound

    def shuffled_indices(self, count: int) -> list[int]:
        """Fisher-Yates permutation of range(count) driven by this stream."""
        order = list(range(count))
        for i in range(count - 1, 0, -1):
            j = self.next_below(i + 1)
            order[i], order[j] = order[j], order[i]
        return order


def derive_rng(seed: int, stream_tag: int) -> SplitMix64:
    """Independent SplitMix64 substream for (seed, stream_tag).

    The 32-bit seed is zero-extended to 64 bits and xored with
    stream_tag * GOLDEN_GAMMA (mod 2**64). Identical inputs give identical
    sequences everywhere; distinct tags give statistically unrelated
    streams.
    """
    base = (seed & 0xFFFFFFFF) ^ ((stream_tag * GOLDEN_GAMMA) & MASK64)
    return SplitMix64(base)
