"""SplitMix64 pseudo-random generator.

One tiny PRNG used everywhere determinism matters: the world core (both
the compiled and pure-Python backends implement the identical update),
agent exploration, replay sampling, and weight initialization.  Chosen
because the update is a handful of 64-bit ops that produce bit-identical
streams in C and in Python.
"""

from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


class SplitMix64:
    """Seeded 64-bit generator; uniform doubles carry 53 random bits."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform(self) -> float:
        """Double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def below(self, n: int) -> int:
        """Integer in [0, n)."""
        return int(self.uniform() * n)

    def getstate(self) -> int:
        return self.state

    def setstate(self, state: int) -> None:
        self.state = state & _MASK


def derive_seed(seed: int, stream: int) -> int:
    """Decorrelated child seed for a named stream (agent rng, init rng, ...)."""
    g = SplitMix64((seed ^ (stream * 0xD6E8FEB86659FD93)) & _MASK)
    return g.next_u64()
