"""
Grids, the kernel pair (a, b) and the Hilbert-space calculus of C'_{a,b}.

Everything lives on a fixed time grid ``0 = t_0 < ... < t_M = T``.  An element
``w`` of C'_{a,b} carries three synchronised arrays:

* ``z``     -- nodal density ``Dw(t_j)``,
* ``w``     -- nodal values ``w(t_j) = int_0^{t_j} z db``,
* ``cells`` -- the density on each interval, ``(w(t_j) - w(t_{j-1})) / (b(t_j) - b(t_{j-1}))``.

Inner products, the pairing with ``a`` and the stochastic integral are all
computed from ``cells``.  This makes the discrete Gaussian identities (mean
``(w, a)``, variance ``||w||^2``, reproducing property) hold exactly on the grid,
so Monte Carlo checks see no quadrature bias.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class GridMismatchError(ValueError):
    """Raised when arrays or elements live on incompatible grids."""


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing partition of [0, T] starting exactly at 0."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size < 3:
            raise ValueError("grid needs at least M=2 intervals")
        if pts[0] != 0.0:
            raise ValueError("grid must start exactly at 0")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, T: float = 1.0, M: int = 4096) -> "Grid":
        if T <= 0:
            raise ValueError("horizon T must be positive")
        return cls(np.linspace(0.0, T, M + 1))

    @property
    def M(self) -> int:
        return self.points.size - 1

    @property
    def T(self) -> float:
        return float(self.points[-1])

    def __len__(self):
        return self.points.size

    def index(self, t: float) -> int:
        """Index of the grid node nearest to ``t`` (ties go left)."""
        if not 0.0 <= t <= self.T:
            raise ValueError(f"time {t} outside [0, {self.T}]")
        j = int(np.searchsorted(self.points, t))
        if j == 0:
            return 0
        if j == self.points.size:
            return j - 1
        return j if self.points[j] - t < t - self.points[j - 1] else j - 1

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )


@dataclass(frozen=True, eq=False)
class KernelPair:
    """Mean function ``a`` and variance function ``b`` sampled on a grid.

    Parameters
    ----------
    grid : Grid
    a, a_prime, b, b_prime : array_like
        Values of a, a', b, b' at the grid nodes.
    name : str, optional
        Preset name, used only in reports.
    """

    grid: Grid
    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        n = len(self.grid)
        for key in ("a", "a_prime", "b", "b_prime"):
            arr = _frozen(getattr(self, key))
            if arr.shape != (n,):
                raise GridMismatchError(f"{key} has shape {arr.shape}, grid has {n} nodes")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{key} has non-finite values")
            object.__setattr__(self, key, arr)
        if self.a[0] != 0.0 or self.b[0] != 0.0:
            raise ValueError("need a(0) = 0 and b(0) = 0")
        if not np.all(np.diff(self.b) > 0):
            raise ValueError("b must be strictly increasing on the grid")
        if not np.all(self.b_prime > 0):
            raise ValueError("b' must be positive")
        # a' in L^2 and int |a'|^2 d|a| < inf, with d|a| = |a'| dt
        checks = {
            "int a'^2 dt": stieltjes_integral(self.a_prime**2, self.grid.points, self.grid),
            "int |a'|^2 d|a|": stieltjes_integral(np.abs(self.a_prime) ** 3, self.grid.points, self.grid),
        }
        for label, value in checks.items():
            if not np.isfinite(value):
                raise ValueError(f"{label} is not finite")

    @classmethod
    def from_functions(
        cls,
        a: Callable,
        a_prime: Callable,
        b: Callable,
        b_prime: Callable,
        T: float = 1.0,
        M: int = 4096,
        grid: Grid | None = None,
        name: str = "custom",
    ) -> "KernelPair":
        """Sample closed-form callbacks once onto a grid."""
        grid = grid if grid is not None else Grid.uniform(T, M)
        t = grid.points

        def ev(f):
            return np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)

        return cls(grid, ev(a), ev(a_prime), ev(b), ev(b_prime), name=name)

    @property
    def T(self) -> float:
        return self.grid.T

    def b_at(self, s) -> np.ndarray | float:
        """b at arbitrary times in [0, T]; exact at nodes, linear in between."""
        return self._interp(s, self.b)

    def a_at(self, s) -> np.ndarray | float:
        return self._interp(s, self.a)

    def _interp(self, s, values):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0) or np.any(s_arr > self.T):
            raise ValueError(f"time(s) {s} outside [0, {self.T}]")
        out = np.interp(s_arr, self.grid.points, values)
        return float(out) if out.ndim == 0 else out

    def scaled_drift(self, factor: float) -> "KernelPair":
        """Same variance function, mean function multiplied by ``factor``."""
        return KernelPair(
            self.grid, factor * self.a, factor * self.a_prime, self.b, self.b_prime,
            name=f"{self.name}*{factor:g}",
        )

    def mean_element(self) -> "CambElement":
        """``a`` itself as an element of C'_{a,b}."""
        return CambElement.from_values(self.a, self)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "grid": self.grid.points.tolist(),
            "a": self.a.tolist(),
            "a_prime": self.a_prime.tolist(),
            "b": self.b.tolist(),
            "b_prime": self.b_prime.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict, name: str = "custom") -> "KernelPair":
        missing = {"T", "grid", "a", "a_prime", "b", "b_prime"} - set(doc)
        if missing:
            raise ValueError(f"kernel document missing fields: {sorted(missing)}")
        grid = Grid(doc["grid"])
        if not np.isclose(grid.T, doc["T"], rtol=0, atol=1e-12):
            raise ValueError("T does not match the last grid point")
        return cls(grid, doc["a"], doc["a_prime"], doc["b"], doc["b_prime"], name=name)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KernelPair":
        return cls.from_dict(json.loads(text))


PRESETS: dict[str, tuple[Callable, Callable, Callable, Callable]] = {
    "wiener": (
        lambda t: np.zeros_like(t),
        lambda t: np.zeros_like(t),
        lambda t: t,
        lambda t: np.ones_like(t),
    ),
    "drifted": (
        lambda t: t,
        lambda t: np.ones_like(t),
        lambda t: t,
        lambda t: np.ones_like(t),
    ),
    "curved": (
        lambda t: t**2,
        lambda t: 2 * t,
        lambda t: t + t**2 / 2,
        lambda t: 1 + t,
    ),
}


def preset(name: str, M: int = 4096, T: float = 1.0) -> KernelPair:
    """Named kernel pair: ``wiener``, ``drifted`` or ``curved``."""
    try:
        fns = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown kernel preset {name!r}; choose from {sorted(PRESETS)}") from None
    return KernelPair.from_functions(*fns, T=T, M=M, name=name)


@dataclass(frozen=True, eq=False)
class CambElement:
    """An element ``w`` of C'_{a,b} on a grid (see module docstring)."""

    z: np.ndarray
    w: np.ndarray
    cells: np.ndarray
    grid: Grid = field(repr=False)

    def __post_init__(self):
        n = len(self.grid)
        for key, shape in (("z", (n,)), ("w", (n,)), ("cells", (n - 1,))):
            arr = _frozen(getattr(self, key))
            if arr.shape != shape:
                raise GridMismatchError(f"{key} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, key, arr)
        if self.w[0] != 0.0:
            raise ValueError("w(0) must be 0")

    @classmethod
    def from_density(cls, z, kp: KernelPair) -> "CambElement":
        """``D^{-1} z``: cumulative trapezoid of ``z`` against ``b``."""
        z = np.asarray(z, dtype=float)
        if z.shape != kp.b.shape:
            raise GridMismatchError(f"density has shape {z.shape}, grid has {kp.b.size} nodes")
        cells = 0.5 * (z[:-1] + z[1:])
        w = np.concatenate(([0.0], np.cumsum(cells * np.diff(kp.b))))
        return cls(z, w, cells, kp.grid)

    @classmethod
    def from_values(cls, w, kp: KernelPair) -> "CambElement":
        """Build from path values; the nodal density is recovered as ``w'/b'``."""
        w = np.asarray(w, dtype=float)
        if w.shape != kp.b.shape:
            raise GridMismatchError(f"values have shape {w.shape}, grid has {kp.b.size} nodes")
        cells = np.diff(w) / np.diff(kp.b)
        z = np.gradient(w, kp.grid.points) / kp.b_prime
        return cls(z, w, cells, kp.grid)

    @classmethod
    def zero(cls, kp: KernelPair) -> "CambElement":
        n = len(kp.grid)
        return cls(np.zeros(n), np.zeros(n), np.zeros(n - 1), kp.grid)

    def _check(self, other: "CambElement"):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("elements live on different grids")

    def __add__(self, other: "CambElement") -> "CambElement":
        self._check(other)
        return CambElement(self.z + other.z, self.w + other.w, self.cells + other.cells, self.grid)

    def __sub__(self, other: "CambElement") -> "CambElement":
        return self + (-1.0) * other

    def __mul__(self, c: float) -> "CambElement":
        c = float(c)
        return CambElement(c * self.z, c * self.w, c * self.cells, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def norm(self, kp: KernelPair) -> float:
        return float(np.sqrt(max(inner_camb(self, self, kp), 0.0)))

    def value_at(self, t: float) -> float:
        return float(self.w[self.grid.index(t)])


def stieltjes_integral(f, g, grid: Grid) -> float:
    """Trapezoid-in-``f`` Stieltjes sum ``sum 0.5 (f_{j-1} + f_j)(g_j - g_{j-1})``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(grid)
    if f.shape != (n,) or g.shape != (n,):
        raise GridMismatchError(f"expected arrays of length {n}, got {f.shape} and {g.shape}")
    return float(np.sum(0.5 * (f[:-1] + f[1:]) * np.diff(g)))


def _check_on(kp: KernelPair, *ws: CambElement):
    for w in ws:
        if not w.grid.same_as(kp.grid):
            raise GridMismatchError("element and kernel pair use different grids")


def inner_camb(w1: CambElement, w2: CambElement, kp: KernelPair) -> float:
    """``(w1, w2)_{C'} = int Dw1 Dw2 db``."""
    _check_on(kp, w1, w2)
    return float(np.sum(w1.cells * w2.cells * np.diff(kp.b)))


def pair_with_a(w: CambElement, kp: KernelPair) -> float:
    """``(w, a)_{C'} = int Dw da``."""
    _check_on(kp, w)
    return float(np.sum(w.cells * np.diff(kp.a)))


def beta_kernel(t: float, kp: KernelPair) -> CambElement:
    """Reproducing kernel ``beta_t(s) = min(b(s), b(t))`` with ``t`` snapped to the grid."""
    idx = kp.grid.index(t)
    n = len(kp.grid)
    z = (np.arange(n) <= idx).astype(float) if idx > 0 else np.zeros(n)
    cells = (np.arange(n - 1) < idx).astype(float)
    w = np.minimum(kp.b, kp.b[idx])
    return CambElement(z, w, cells, kp.grid)


def reproduce(w: CambElement, t: float, kp: KernelPair) -> float:
    """``(w, beta_t)_{C'}``, which should equal ``w(t)``."""
    return inner_camb(w, beta_kernel(t, kp), kp)


def gram_schmidt(
    ws: Sequence[CambElement], kp: KernelPair, drop_tol: float = 1e-12
) -> list[CambElement]:
    """Orthonormalise under ``inner_camb``.

    Modified Gram-Schmidt with one re-orthogonalisation pass.  A vector whose
    residual norm falls below ``drop_tol * max input norm`` is dropped, so the
    output spans the same space as the input but may be shorter.
    """
    ws = list(ws)
    if not ws:
        raise ValueError("gram_schmidt needs at least one element")
    _check_on(kp, *ws)
    scale = max(w.norm(kp) for w in ws)
    out: list[CambElement] = []
    if scale == 0.0:
        raise ValueError("all inputs are numerically zero")
    for w in ws:
        v = w
        for _ in range(2):
            for q in out:
                v = v - inner_camb(v, q, kp) * q
        nv = v.norm(kp)
        if nv > drop_tol * scale:
            out.append((1.0 / nv) * v)
    if not out:
        raise ValueError("all inputs are numerically zero")
    return out
