"""splitmix64: a tiny seedable 64-bit generator, identical in any language.

This is the generator every seeded operation in the package funnels through
(corpus splitting, synthetic generation, SVM epoch shuffles). It was chosen
because the reference constants are public domain and the output sequence is
easy to reproduce from the two-line update rule below, so independent
implementations can be checked against the published vectors (seed 0 yields
0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, ...).

Model files record the generator under the name "splitmix64".
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

GENERATOR_NAME = "splitmix64"


class SplitMix64:
    """Deterministic stream of 64-bit integers from a 64-bit seed."""

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._state = seed

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via modulo rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def next_float(self) -> float:
        """Uniform float64 in [0, 1): the top 53 bits scaled by 2**-53."""
        return (self.next_u64() >> 11) * 2.0**-53

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates shuffle, descending index, j = next_below(i + 1)."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.next_below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]
