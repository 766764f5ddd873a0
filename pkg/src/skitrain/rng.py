"""Deterministic random streams.

All procedural draws (track radii, lattice noise, trace jitter) go through
SplitMix64 keyed by a 64-bit seed plus a purpose tag, so every generated
artifact is reproducible bit-for-bit across platforms and sessions.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def fnv1a64(tag: str) -> int:
    h = _FNV_OFFSET
    for b in tag.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """Sequential 64-bit generator for one (seed, purpose) stream."""

    def __init__(self, seed: int, tag: str = ""):
        self._state = (int(seed) ^ fnv1a64(tag)) & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        # Sum of 12 uniforms (Irwin-Hall): cheap, deterministic, good enough
        # for jitter; not used anywhere tail accuracy matters.
        s = sum(self.uniform() for _ in range(12)) - 6.0
        return mean + std * s

    def sign(self) -> int:
        return 1 if (self.next_u64() & 1) else -1


def hash_u64(seed: int, tag: str, *parts: int) -> int:
    """Stateless hash of (seed, tag, integers); stable across processes."""
    acc = (int(seed) ^ fnv1a64(tag)) & _MASK64
    for p in parts:
        acc = _mix((acc + _GOLDEN) & _MASK64) ^ (int(p) & _MASK64)
    return _mix((acc + _GOLDEN) & _MASK64)


def lattice_uniform(seed: int, tag: str, i: int, j: int) -> float:
    """Uniform [-1, 1) value attached to integer lattice node (i, j)."""
    return ((hash_u64(seed, tag, i, j) >> 11) * (1.0 / (1 << 52))) - 1.0


def derive_seed(seed: int, tag: str, *parts: int) -> int:
    """Child seed for an independent sub-stream."""
    return hash_u64(seed, tag, *parts)
