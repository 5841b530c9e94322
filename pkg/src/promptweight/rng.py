"""Deterministic random generation for synthetic datasets.

The generator is xoshiro256** with splitmix64 state initialization. Its
64-bit integer stream is exactly reproducible across platforms and
languages, which is what pins synthetic golden values. Gaussians come from
Box-Muller over 53-bit uniforms, so derived floats match to libm rounding.
"""

import numpy as np

from . import kernels

_MASK64 = (1 << 64) - 1
_U53_INV = 2.0**-53


def _splitmix64(seed: int, count: int) -> list[int]:
    x = seed & _MASK64
    out = []
    for _ in range(count):
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


class Xoshiro256StarStar:
    """xoshiro256** stream seeded from a single 64-bit integer."""

    def __init__(self, seed: int):
        self._state = np.array(_splitmix64(int(seed), 4), dtype=np.uint64)
        if not self._state.any():
            # all-zero state is the one invalid xoshiro state
            self._state[0] = np.uint64(1)

    def raw(self, count: int) -> np.ndarray:
        """Next `count` raw uint64 draws."""
        out = np.empty(int(count), dtype=np.uint64)
        kernels.xoshiro_fill(self._state, out)
        return out

    def uniform(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) with 53-bit resolution."""
        return (self.raw(count) >> np.uint64(11)).astype(np.float64) * _U53_INV

    def normal(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller; consumes 2*ceil(count/2) raw draws."""
        pairs = (int(count) + 1) // 2
        bits = self.raw(2 * pairs)
        u1 = ((bits[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53_INV
        u2 = (bits[1::2] >> np.uint64(11)).astype(np.float64) * _U53_INV
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[: int(count)]

    def unit_vectors(self, count: int, dim: int) -> np.ndarray:
        """Rows drawn uniformly on the unit sphere in R^dim (dim >= 2)."""
        g = self.normal(int(count) * int(dim)).reshape(int(count), int(dim))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise RuntimeError("degenerate zero-norm Gaussian draw")
        return g / norms
