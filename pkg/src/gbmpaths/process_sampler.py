"""Sampling generalized Brownian motion paths and PWZ stochastic integrals."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import montecarlo
from .kernel_functions import (
    CambElement,
    Grid,
    GridMismatchError,
    KernelPair,
    inner_camb,
    pair_with_a,
)
from .rng import RngStream


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Path values ``x(t_j)`` on a grid, with ``x(0) = 0``."""

    values: np.ndarray
    grid: Grid = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise GridMismatchError(f"path has shape {vals.shape}, grid has {len(self.grid)} nodes")
        if vals[0] != 0.0:
            raise ValueError("paths start at 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index(t)])


def sample_paths(kp: KernelPair, rng: RngStream, n_paths: int) -> np.ndarray:
    """``n_paths`` GBMP paths as an array of shape ``(n_paths, M + 1)``.

    ``x(t_j) = a(t_j) + sum_{l<=j} sqrt(b(t_l) - b(t_{l-1})) xi_l``.
    """
    M = kp.grid.M
    xi = rng.normals((n_paths, M))
    out = np.zeros((n_paths, M + 1))
    np.cumsum(xi * np.sqrt(np.diff(kp.b)), axis=1, out=out[:, 1:])
    out += kp.a
    return out


def sample_gbmp(kp: KernelPair, rng: RngStream) -> SamplePath:
    return SamplePath(sample_paths(kp, rng, 1)[0], kp.grid)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, SamplePath) else np.asarray(x, dtype=float)


def pwz(w: CambElement, x):
    """PWZ integral ``(w, x)~`` as the Riemann-Stieltjes sum of ``Dw`` against ``dx``.

    ``x`` may be a :class:`SamplePath` or an array whose last axis is the grid;
    the result then has the leading shape of ``x``.
    """
    vals = _values(x)
    if vals.shape[-1] != w.cells.size + 1:
        raise GridMismatchError(f"path has {vals.shape[-1]} nodes, element has {w.cells.size + 1}")
    if isinstance(x, SamplePath) and not x.grid.same_as(w.grid):
        raise GridMismatchError("path and element use different grids")
    out = np.diff(vals, axis=-1) @ w.cells
    return float(out) if np.ndim(out) == 0 else out


def scale_path(x, rho: float):
    if isinstance(x, SamplePath):
        return SamplePath(rho * x.values, x.grid)
    return rho * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class McReport:
    estimate: float
    closed_form: float
    stderr: float
    n: int
    seed: int
    passed: bool

    @property
    def z_score(self) -> float:
        return montecarlo._z(self.estimate - self.closed_form, self.stderr)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def char_functional_closed_form(w: CambElement, rho: float, kp: KernelPair) -> float:
    """``E exp(rho (w, x)~) = exp(rho^2 ||w||^2 / 2 + rho (w, a))``."""
    return math.exp(0.5 * rho**2 * inner_camb(w, w, kp) + rho * pair_with_a(w, kp))


def verify_char_functional(
    w: CambElement,
    rho: float,
    kp: KernelPair,
    N: int,
    rng: RngStream,
    k_sigma: float = 4.0,
) -> McReport:
    """Monte Carlo check of the exponential moment of a PWZ integral."""
    if N < 1000:
        raise ValueError("use at least N = 1000 samples")
    est = montecarlo.run(
        lambda size, stream: np.exp(rho * pwz(w, sample_paths(kp, stream, size))),
        N, rng, complex_valued=False,
    )
    exact = char_functional_closed_form(w, rho, kp)
    return McReport(est.mean, exact, est.stderr, est.n, rng.seed, est.agrees(exact, k_sigma))


def write_paths_csv(fh, paths, grid: Grid) -> None:
    """Write ``t, x_0(t), x_1(t), ...`` rows to an open text file."""
    arr = np.atleast_2d(np.array([_values(p) for p in paths]) if isinstance(paths, list) else _values(paths))
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t"] + [f"x{i}" for i in range(arr.shape[0])])
    for j, t in enumerate(grid.points):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in arr[:, j]])
