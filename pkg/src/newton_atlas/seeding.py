"""Deterministic pseudorandom streams.

Everything random in this package flows through SplitMix64: grid phase
offsets, root-ensemble draws, jitter directions, trial seed derivation.
The generator is tiny (one u64 of state), has a closed-form jump, and
its output is identical across Python and C, which makes run-to-run and
backend-to-backend reproducibility checkable bit for bit.  numpy's
Generator would be fine for sampling quality but pinning its bitstream
across versions is not guaranteed, and the compiled kernel would need a
second implementation anyway.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF

# splitmix64 constants (Steele, Lea, Flood; same as java.util.SplittableRandom)
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """Finalizer of splitmix64: bijective scramble of a u64."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


class SplitMix64:
    """splitmix64 stream; state advances by the golden-ratio gamma."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_floats(self, n: int) -> list[float]:
        return [self.next_float() for _ in range(n)]


def derive_seed(seed: int, *indices: int) -> int:
    """Derive an independent child seed from (seed, i0, i1, ...).

    Counter-mode: each index is folded in through the mix64 bijection,
    so (seed, 3) and (seed, 4) give unrelated streams and the result
    does not depend on how many draws the parent stream has made.
    """
    z = mix64(seed)
    for idx in indices:
        z = mix64((z + _GAMMA * (idx + 1)) & MASK64)
    return z
