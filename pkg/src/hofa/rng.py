"""Counter-based SplitMix64 streams.

Every stochastic routine in the package takes a 64-bit seed and draws its
numbers from a :class:`SplitMix64` stream.  SplitMix64 advances its state by
a fixed odd constant, so the ``i``-th output is a pure function of
``seed + i * GAMMA``; this makes the generator trivially vectorisable and
lets sub-streams be derived deterministically with :func:`derive_seed`.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix_scalar(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child seed from ``seed`` and a path of integer keys."""
    s = seed & MASK64
    for key in keys:
        s = _mix_scalar((s + (key & MASK64) * GAMMA + GAMMA) & MASK64)
    return s


class SplitMix64:
    """SplitMix64 generator with vectorised draws.

    >>> g = SplitMix64(0)
    >>> hex(g.next_u64())
    '0xe220a8397b1dcdaf'
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw outputs as a uint64 array."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix(z)
        self.state = (self.state + n * GAMMA) & MASK64
        return out

    def next_u64(self) -> int:
        return int(self.u64(1)[0])

    def integers(self, bound: int, size) -> np.ndarray:
        """Uniform integers in ``[0, bound)`` (multiply-shift on the top 32 bits)."""
        if bound < 1 or bound > 1 << 32:
            raise ValueError("bound must lie in [1, 2**32]")
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        hi = self.u64(n) >> np.uint64(32)
        return ((hi * np.uint64(bound)) >> np.uint64(32)).astype(np.int64).reshape(shape)

    def below(self, bound: int) -> int:
        return int(self.integers(bound, 1)[0])

    def random(self, size) -> np.ndarray:
        """Uniform doubles in ``[0, 1)``."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        return ((self.u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53).reshape(shape)

    def residues(self, p: int, size) -> np.ndarray:
        return self.integers(p, size)

    def permutation(self, n: int) -> np.ndarray:
        # Fisher-Yates driven by the stream.
        out = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def unit_disc(self, size) -> np.ndarray:
        """Complex values uniform in the closed unit disc."""
        r = np.sqrt(self.random(size))
        theta = 2 * np.pi * self.random(size)
        return r * np.exp(1j * theta)
