"""SplitMix64: a tiny, fully specified 64-bit generator.

Output k (k = 1, 2, ...) of a stream seeded with s is mix(s + k * GOLDEN)
modulo 2^64, so the sequence is reproducible in any language.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def mix64(z):
    """The SplitMix64 finalizer on a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK

    def next_u64(self, size=None):
        count = 1 if size is None else int(np.prod(size))
        k = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * np.uint64(GOLDEN)
        self.state = (self.state + count * GOLDEN) & _MASK
        out = mix64(z)
        return int(out[0]) if size is None else out.reshape(size)

    def random(self, size=None):
        """Uniform doubles in [0, 1) from the top 53 bits."""
        u = self.next_u64(1 if size is None else size)
        x = (np.asarray(u) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return float(x.ravel()[0]) if size is None else x

    def uniform(self, lo=0.0, hi=1.0, size=None):
        return lo + (hi - lo) * self.random(size)

    def normal(self, size=None):
        """Standard normals by Box-Muller."""
        count = 1 if size is None else int(np.prod(size))
        m = (count + 1) // 2
        u1 = 1.0 - self.random(m)  # (0, 1]
        u2 = self.random(m)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)])[:count]
        return float(z[0]) if size is None else z.reshape(size)
