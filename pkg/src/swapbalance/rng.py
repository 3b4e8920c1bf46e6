"""Counter-based random numbers built on the SplitMix64 finaliser.

All arithmetic is modulo 2**64::

    mix64(x):
        z = x + 0x9E3779B97F4A7C15
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    derive_seed(seed, i)      = mix64(mix64(seed) ^ i)
    uniform(seed, tick, cell) = (mix64(derive_seed(seed, tick) ^ cell) >> 11) * 2**-53

``mix64`` applied to successive multiples of the golden constant is exactly
the SplitMix64 stream, exposed as :class:`SplitMix64`. Inside a match every
random event is addressed by ``(tick, cell)`` rather than drawn in sequence,
so changing one tile does not reshuffle the randomness of unrelated tiles.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Child seed, a pure function of ``(seed, index)``."""
    return mix64(mix64(seed & MASK64) ^ (index & MASK64))


def to_unit(x: int) -> float:
    return (x >> 11) * _INV53


class SplitMix64:
    """Sequential SplitMix64 stream (``state += golden; output mix``)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        out = mix64(self.state)
        self.state = (self.state + GOLDEN) & MASK64
        return out

    def random(self) -> float:
        return to_unit(self.next_u64())


class CounterRNG:
    """Random draws addressed by ``(tick, cell)`` under a fixed match seed."""

    __slots__ = ("seed", "_tick", "_tick_key")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._tick = -1
        self._tick_key = 0

    def uniform(self, tick: int, cell: int) -> float:
        if tick != self._tick:
            self._tick = tick
            self._tick_key = derive_seed(self.seed, tick)
        return to_unit(mix64(self._tick_key ^ cell))

    def copy(self) -> "CounterRNG":
        return CounterRNG(self.seed)

    def __eq__(self, other):
        return isinstance(other, CounterRNG) and other.seed == self.seed

    def __repr__(self):
        return f"CounterRNG(seed=0x{self.seed:016x})"
