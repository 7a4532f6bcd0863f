"""Counter-based deterministic random stream.

Pretraining-data generation must produce byte-identical output no matter how
work is distributed over threads.  Stateful global RNGs cannot give that, so
each unit of work owns an `RngStream` keyed by ``(seed, *key)`` — typically
``(seed, duplication_index, document_index)``.  Two streams with the same key
yield the same sequence on any machine and any worker count.

The generator is SplitMix64: a 64-bit counter advanced by a fixed odd
increment, finalized with two xor-multiply rounds.  It is tiny, fast, and
passes the statistical bar needed here (shuffles and category draws).
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class RngStream:
    """Deterministic random stream keyed by a seed and integer key parts."""

    def __init__(self, seed: int, *key: int):
        state = seed & _MASK64
        for part in key:
            # Feed each key part through the finalizer so (1, 0) and (0, 1)
            # land in unrelated regions of the counter space.
            state = _mix(state ^ _mix((part & _MASK64) + _GOLDEN))
        self._state = state

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], inclusive on both ends."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        n = high - low + 1
        # Rejection sampling keeps the draw exactly uniform.
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return low + (u % n)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("cannot choose from an empty sequence")
        return items[self.randint(0, len(items) - 1)]
