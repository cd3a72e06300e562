"""Chunked Monte Carlo accumulation with a fixed shard plan.

Chunk ``c`` always draws from ``rng.substream(c)`` and partial moments are
merged in chunk order, so an estimate depends only on ``(seed, N, chunk_size)``
and never on the number of worker threads.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import RngStream

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 8192


@dataclass(frozen=True)
class Estimate:
    """Sample mean with componentwise standard error.

    For complex estimands ``stderr`` is complex too: its real part is the
    standard error of the real component and its imaginary part that of the
    imaginary component.
    """

    mean: complex | float
    stderr: complex | float
    n: int
    nonfinite: int = 0

    @property
    def is_complex(self) -> bool:
        return isinstance(self.mean, complex)

    def z_scores(self, target) -> tuple[float, ...]:
        if self.is_complex:
            target = complex(target)
            return (
                _z(self.mean.real - target.real, self.stderr.real),
                _z(self.mean.imag - target.imag, self.stderr.imag),
            )
        return (_z(self.mean - float(target), self.stderr),)

    def max_abs_z(self, target) -> float:
        return max(abs(z) for z in self.z_scores(target))

    def agrees(self, target, k: float = 4.0) -> bool:
        return self.max_abs_z(target) <= k


def _z(diff: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / se


@dataclass
class _Moments:
    n: int
    mean: np.ndarray  # shape (2,): real, imag
    m2: np.ndarray
    nonfinite: int

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        values = np.asarray(values)
        finite = np.isfinite(values)
        vals = values[finite]
        parts = np.stack([vals.real, vals.imag]) if vals.size else np.zeros((2, 0))
        n = vals.size
        mean = parts.mean(axis=1) if n else np.zeros(2)
        m2 = ((parts - mean[:, None]) ** 2).sum(axis=1) if n else np.zeros(2)
        return cls(n, mean, m2, int(values.size - n))

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        if n == 0:
            return _Moments(0, np.zeros(2), np.zeros(2), self.nonfinite + other.nonfinite)
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        return _Moments(n, mean, m2, self.nonfinite + other.nonfinite)


def chunk_sizes(N: int, chunk_size: int = DEFAULT_CHUNK) -> list[int]:
    if N < 1:
        raise ValueError("need N >= 1")
    full, rest = divmod(N, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def run(
    draw: Callable[[int, RngStream], np.ndarray],
    N: int,
    rng: RngStream,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    complex_valued: bool | None = None,
) -> Estimate:
    """Estimate ``E[draw]`` from ``N`` samples.

    ``draw(size, stream)`` must return ``size`` samples using only ``stream``.
    Non-finite samples are excluded and counted; a warning is logged when
    they exceed 0.1% of ``N``.
    """
    sizes = chunk_sizes(N, chunk_size)
    seen_complex = []

    def one(c: int) -> _Moments:
        vals = np.asarray(draw(sizes[c], rng.substream(c)))
        if vals.shape != (sizes[c],):
            raise ValueError(f"draw returned shape {vals.shape}, expected ({sizes[c]},)")
        seen_complex.append(np.iscomplexobj(vals))
        return _Moments.of(vals)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(c) for c in range(len(sizes))]

    total = parts[0]
    for p in parts[1:]:
        total = total.merge(p)

    if total.nonfinite > 0.001 * N:
        log.warning("%d of %d Monte Carlo samples were non-finite", total.nonfinite, N)
    if total.n == 0:
        nan = float("nan")
        return Estimate(nan, nan, 0, total.nonfinite)

    var = total.m2 / max(total.n - 1, 1)
    se = np.sqrt(var / total.n)
    is_complex = any(seen_complex) if complex_valued is None else complex_valued
    if is_complex:
        return Estimate(complex(total.mean[0], total.mean[1]), complex(se[0], se[1]), total.n, total.nonfinite)
    return Estimate(float(total.mean[0]), float(se[0]), total.n, total.nonfinite)
