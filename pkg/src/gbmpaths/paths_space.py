"""
The paths space: function-space-valued paths ``X(s)`` indexed by paths-time ``s``.

A cylinder section ``(X(s_1), ..., X(s_n))`` is sampled by drawing ``n``
independent GBMP paths and pushing them through the affine map

    X(s_k) = sum_{l<=k} sqrt(b(s_l) - b(s_{l-1})) (x_l - a) + a.

Paths-times ``s_k`` index copies of the process and need not be grid nodes;
state-times ``t`` (the argument of each path) are always grid nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import montecarlo
from .kernel_functions import CambElement, Grid, GridMismatchError, KernelPair
from .montecarlo import DEFAULT_CHUNK, Estimate
from .process_sampler import SamplePath, pwz, sample_paths
from .rng import RngStream


@dataclass(frozen=True)
class PathsTuple:
    """Strictly increasing paths-times ``0 < s_1 < ... < s_n`` (``s_0 = 0`` implicit)."""

    s: tuple[float, ...]

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(self.s))
        if not s:
            raise ValueError("need at least one paths-time")
        if s[0] <= 0 or any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError(f"paths-times must satisfy 0 < s_1 < ... < s_n, got {s}")
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return len(self.s)

    def check(self, kp: KernelPair) -> None:
        if self.s[-1] > kp.T:
            raise ValueError(f"s_n = {self.s[-1]} exceeds T = {kp.T}")

    def b_values(self, kp: KernelPair) -> np.ndarray:
        """``b(s_0), b(s_1), ..., b(s_n)`` with ``b(s_0) = 0``."""
        self.check(kp)
        return np.concatenate(([0.0], kp.b_at(np.array(self.s))))

    def b_increments(self, kp: KernelPair) -> np.ndarray:
        return np.diff(self.b_values(kp))

    def coefficients(self, kp: KernelPair) -> np.ndarray:
        """``sqrt(b(s_l) - b(s_{l-1}))`` for ``l = 1..n``."""
        return np.sqrt(self.b_increments(kp))


@dataclass(frozen=True, eq=False)
class PathsSection:
    """Values of ``(X(s_1), ..., X(s_n))``.

    ``values`` has shape ``(n, ..., M + 1)``; any middle axes are a batch of
    independent draws.
    """

    values: np.ndarray
    times: PathsTuple
    grid: Grid = field(repr=False)

    def __post_init__(self):
        if self.values.shape[0] != self.times.n or self.values.shape[-1] != len(self.grid):
            raise GridMismatchError(
                f"section shape {self.values.shape} does not fit n={self.times.n}, nodes={len(self.grid)}"
            )

    def __getitem__(self, k: int) -> np.ndarray:
        return self.values[k]

    @property
    def sections(self) -> list[SamplePath]:
        if self.values.ndim != 2:
            raise ValueError("sections are only available for a single (unbatched) draw")
        return [SamplePath(v, self.grid) for v in self.values]

    def scaled(self, rho: float) -> "PathsSection":
        return PathsSection(rho * self.values, self.times, self.grid)


def _stack(xs, kp: KernelPair) -> np.ndarray:
    if isinstance(xs, np.ndarray):
        arr = xs
    else:
        arr = np.stack([x.values if isinstance(x, SamplePath) else np.asarray(x, float) for x in xs])
    if arr.shape[-1] != len(kp.grid):
        raise GridMismatchError(f"paths have {arr.shape[-1]} nodes, grid has {len(kp.grid)}")
    return arr


def transform_T(xs, times: PathsTuple, kp: KernelPair) -> PathsSection:
    """Map ``n`` function-space samples to the cylinder section at ``times``."""
    arr = _stack(xs, kp)
    if arr.shape[0] != times.n:
        raise ValueError(f"got {arr.shape[0]} paths for a tuple of length {times.n}")
    c = times.coefficients(kp).reshape((-1,) + (1,) * (arr.ndim - 1))
    out = np.cumsum(c * (arr - kp.a), axis=0) + kp.a
    return PathsSection(out, times, kp.grid)


def sample_section(
    times: PathsTuple, kp: KernelPair, rng: RngStream, size: int | None = None
) -> PathsSection:
    """Draw from the cylinder law at ``times``; ``size`` adds a batch axis."""
    times.check(kp)
    k = 1 if size is None else size
    x = sample_paths(kp, rng, times.n * k).reshape(times.n, k, -1)
    if size is None:
        x = x[:, 0]
    return transform_T(x, times, kp)


def polygonal_H(xs, times: PathsTuple, kp: KernelPair, s: float) -> SamplePath:
    """Value at paths-time ``s`` of the polygonal path through ``x_1, ..., x_n``.

    Interpolation is linear in ``b(s)`` between consecutive paths-times, with
    ``x_0 = 0`` and the path held at ``x_n`` after ``s_n``.
    """
    arr = _stack(xs, kp)
    times.check(kp)
    if not 0.0 <= s <= kp.T:
        raise ValueError(f"s = {s} outside [0, {kp.T}]")
    knots = (0.0,) + times.s
    if s >= knots[-1]:
        return SamplePath(arr[-1], kp.grid)
    j = int(np.searchsorted(knots, s, side="left"))
    if j == 0:
        return SamplePath(np.zeros(len(kp.grid)), kp.grid)
    lo = np.zeros(len(kp.grid)) if j == 1 else arr[j - 2]
    hi = arr[j - 1]
    b0, b1, bs = kp.b_at(knots[j - 1]), kp.b_at(knots[j]), kp.b_at(s)
    theta = (bs - b0) / (b1 - b0)
    # (1 - theta) lo + theta hi reproduces hi bit-for-bit at theta = 1
    return SamplePath((1.0 - theta) * lo + theta * hi, kp.grid)


def project(path_of_s: Callable[[float], SamplePath], times: PathsTuple) -> list[SamplePath]:
    """Cylinder projection: evaluate a paths-space path at each ``s_k``."""
    return [path_of_s(s) for s in times.s]


Functional = Callable[[PathsSection], np.ndarray]


def mc_paths_integral(
    f: Functional,
    times: PathsTuple,
    kp: KernelPair,
    N: int,
    rng: RngStream,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> Estimate:
    """Monte Carlo estimate of the paths-space integral of ``f`` at ``times``.

    ``f`` receives a batched :class:`PathsSection` and returns one value per
    draw.  The paths-space integral equals ``E f(T_s(x_1, ..., x_n))``
    under the n-fold product of the GBMP law, which is what is sampled.
    """
    times.check(kp)
    return montecarlo.run(
        lambda size, stream: f(sample_section(times, kp, stream, size)),
        N, rng, chunk_size=chunk_size, workers=workers,
    )


# -- functional combinators ---------------------------------------------------


def pwz_at(w: CambElement, k: int = 0) -> Functional:
    """``(w, X(s_k))~`` (``k`` is 0-based)."""
    return lambda sec: pwz(w, sec[k])


def point_at(t: float, k: int = 0) -> Functional:
    """``X(s_k)(t)`` with ``t`` snapped to the grid."""

    def f(sec: PathsSection):
        return sec[k][..., sec.grid.index(t)]

    return f


def constant(c: complex | float) -> Functional:
    def f(sec: PathsSection):
        return np.full(sec.values.shape[1:-1], c)

    return f


def product(*fs: Functional) -> Functional:
    def f(sec: PathsSection):
        out = fs[0](sec)
        for g in fs[1:]:
            out = out * g(sec)
        return out

    return f


def linear_combination(terms: Sequence[tuple[complex | float, Functional]]) -> Functional:
    def f(sec: PathsSection):
        return sum(c * g(sec) for c, g in terms)

    return f


def exp_of(g: Functional, coef: complex | float = 1.0) -> Functional:
    """``exp(coef * g)``."""
    return lambda sec: np.exp(coef * g(sec))


def scaled(g: Functional, rho: float) -> Functional:
    """``X -> g(rho X)``."""
    return lambda sec: g(sec.scaled(rho))


# -- Jacobian of the finite-dimensional transform ----------------------------


@dataclass(frozen=True)
class JacobianReport:
    det_fd: float
    det_exact: float
    rel_error: float
    passed: bool


def transform_Rn(t: Sequence[float], kp: KernelPair) -> Callable[[np.ndarray], np.ndarray]:
    """The affine map on R^n: ``u_k = sum_{l<=k} sqrt(b(t_l) - b(t_{l-1})) (w_l - a(t_l)) + a(t_k)``."""
    tt = PathsTuple(tuple(t))
    coef = tt.coefficients(kp)
    a_t = np.asarray(kp.a_at(np.array(tt.s)))

    def T(w):
        return np.cumsum(coef * (np.asarray(w, float) - a_t)) + a_t

    return T


def jacobian_check(t: Sequence[float], kp: KernelPair, point, rtol: float = 1e-6) -> JacobianReport:
    """Central-difference Jacobian determinant against ``prod sqrt(b(t_j) - b(t_{j-1}))``."""
    point = np.asarray(point, dtype=float)
    n = len(t)
    if n > 8:
        raise ValueError("finite-difference check limited to n <= 8")
    if point.shape != (n,):
        raise ValueError(f"point must have shape ({n},)")
    T = transform_Rn(t, kp)
    J = np.empty((n, n))
    for i in range(n):
        h = 1e-5 * (1.0 + abs(point[i]))
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (T(point + e) - T(point - e)) / (2 * h)
    det_fd = float(np.linalg.det(J))
    det_exact = float(np.prod(PathsTuple(tuple(t)).coefficients(kp)))
    rel = abs(det_fd - det_exact) / abs(det_exact)
    return JacobianReport(det_fd, det_exact, rel, rel <= rtol)
