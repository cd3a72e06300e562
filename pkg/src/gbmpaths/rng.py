"""Counter-based random streams keyed by ``(seed, stream_id)``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream.

    The pair ``(seed, stream_id)`` is the 128-bit Philox key, so equal pairs
    give bit-identical draws and distinct pairs give independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK:
                raise ValueError(f"{name} must fit in 64 bits, got {v}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        """Child stream; the derivation is ``splitmix64(stream_id * 2^20 + index + 1)``."""
        return RngStream(self.seed, _splitmix64(((self.stream_id << 20) + index + 1) & _MASK))

    def uniforms(self, size) -> np.ndarray:
        """Uniforms in the open interval (0, 1) on the 2^-53 lattice."""
        bits = self.generator().integers(0, 1 << 53, size=size, dtype=np.uint64)
        return (bits.astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, size) -> np.ndarray:
        """Standard normals by inverse CDF of :meth:`uniforms`."""
        return ndtri(self.uniforms(size))
