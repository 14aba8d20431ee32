"""Deterministic randomness used anywhere an order must be recomputable.

The generator is SplitMix64 (Steele et al.), chosen because it is a fixed
64-bit algorithm that is trivial to reimplement in a test or another
language, unlike Python's Mersenne Twister whose state setup is opaque.
Every shuffled surface in the platform (control-condition response order,
control goal distractors and their order, simulated timing jitter) draws
from a stream derived from the session seed plus a purpose code, so the
streams never alias each other.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

# Purpose codes keep per-seed streams independent.
STREAM_EMPATHY = 0x45
STREAM_GOALS = 0x47
STREAM_JITTER = 0x4A


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def next_below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_unit(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)


def stream(seed: int, purpose: int) -> SplitMix64:
    """Stream for (seed, purpose); one warm-up step decorrelates nearby seeds."""
    g = SplitMix64((seed & MASK64) ^ (purpose * 0x9E3779B97F4A7C15 & MASK64))
    g.next_u64()
    return g


def fisher_yates(items: list, rng: SplitMix64) -> list:
    """Classic descending Fisher-Yates; returns a new list."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next_below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
