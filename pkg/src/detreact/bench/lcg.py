"""Seeded 64-bit linear congruential generator.

Benchmarks never touch the host RNG: every randomized choice comes from one
of these, seeded from a benchmark parameter, so validators can replay the
exact sequence.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_MULT = 6364136223846793005
_INC = 1442695040888963407


class Lcg64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = (seed ^ 0x9E3779B97F4A7C15) & _MASK
        self.next_u64()

    def next_u64(self) -> int:
        self.state = (self.state * _MULT + _INC) & _MASK
        return self.state

    def next_below(self, n: int) -> int:
        """Uniform-ish integer in [0, n). Uses the high bits, which have the
        longest period in an LCG."""
        return (self.next_u64() >> 33) % n

    def next_double(self) -> float:
        """Float in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
