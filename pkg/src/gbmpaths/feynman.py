"""
Atomic complex measures, cylinder functionals and their analytic paths-space
and Feynman integrals.

A cylinder functional is ``F(X) = nu_hat(u)`` where ``u_{j,k} = (g_j, X(s_k))~``
for an orthonormal set ``g_1..g_m`` and paths-times ``s_1..s_n``, and ``nu`` is
an atomic complex measure on R^{m n}.  Atom locations are flattened j-major:
entry ``j * n + k`` holds ``v_{j,k}``.

For ``Re(lam) > 0`` the analytic integral is the atom sum of

    exp(-(1/(2 lam)) sum_j sum_l [b(s_l) - b(s_{l-1})] (sum_{k>=l} v_{j,k})^2
        + i lam^{-1/2} sum_{j,k} (g_j, a) v_{j,k}),

and the Feynman integral is the same expression at ``lam = -i q``.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import polygamma

from .kernel_functions import (
    CambElement,
    KernelPair,
    beta_kernel,
    inner_camb,
    pair_with_a,
)
from .paths_space import PathsSection, PathsTuple
from .process_sampler import pwz

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**6
DEFAULT_TAIL_TOL = 1e-12
RATIO_WINDOW = 100
RATIO_SPREAD = 1e-3
# ratio limits within this band of 1 leave the ratio test undecided
RATIO_MARGIN = 1e-4


class DomainError(ValueError):
    """Parameter outside the region where a formula is defined."""


class DivergenceError(ArithmeticError):
    """An atom series fails the ratio test."""

    def __init__(self, message: str, ratio_limit: float):
        super().__init__(message)
        self.ratio_limit = ratio_limit


# -- measures -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TailRule:
    """Countable continuation of an atom list.

    ``atoms(idx)`` maps global atom indices (all at least the number of
    explicit atoms) to ``(locations, weights)``.  ``mass_beyond(K)``, when
    known, is the total variation of all atoms with index ``>= K``.
    """

    atoms: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    mass_beyond: Callable[[int], float] | None = None


@dataclass(frozen=True, eq=False)
class ComplexMeasure:
    locations: np.ndarray
    weights: np.ndarray
    tail: TailRule | None = None
    dim: int | None = None

    def __post_init__(self):
        locs = np.array(self.locations, dtype=float)
        wts = np.array(self.weights, dtype=complex).reshape(-1)
        if locs.ndim == 1:
            locs = locs.reshape(wts.size, -1) if wts.size else locs.reshape(0, self.dim or 1)
        dim = self.dim if self.dim is not None else locs.shape[1]
        if locs.shape != (wts.size, dim):
            raise ValueError(f"locations shape {locs.shape} does not match {wts.size} atoms in R^{dim}")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(wts))):
            raise ValueError("atoms must be finite")
        locs.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "dim", dim)

    @classmethod
    def point_masses(cls, locations, weights) -> "ComplexMeasure":
        return cls(np.atleast_2d(np.asarray(locations, dtype=float)), weights)

    @classmethod
    def unit_mass(cls, dim: int) -> "ComplexMeasure":
        return cls(np.zeros((1, dim)), [1.0])

    @property
    def n_explicit(self) -> int:
        return self.weights.size

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def tail_atoms(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(start, stop)
        locs, wts = self.tail.atoms(idx)
        return np.asarray(locs, float).reshape(idx.size, self.dim), np.asarray(wts, complex)

    def atoms(self, budget: int = DEFAULT_BUDGET) -> tuple[np.ndarray, np.ndarray]:
        """Explicit atoms, continued through the tail up to ``budget`` atoms in total."""
        if self.tail is None or budget <= self.n_explicit:
            return self.locations, self.weights
        tl, tw = self.tail_atoms(self.n_explicit, budget)
        return np.vstack([self.locations, tl]), np.concatenate([self.weights, tw])

    def abs(self) -> "ComplexMeasure":
        """The variation measure ``|nu|``."""
        tail = None
        if self.tail is not None:
            rule = self.tail

            def atoms(idx):
                locs, w = rule.atoms(idx)
                return locs, np.abs(w)

            tail = TailRule(atoms, rule.mass_beyond)
        return ComplexMeasure(self.locations, np.abs(self.weights), tail, self.dim)

    def total_variation(self, budget: int = DEFAULT_BUDGET) -> float:
        explicit = float(np.sum(np.abs(self.weights)))
        if self.tail is None:
            return explicit
        if self.tail.mass_beyond is not None:
            return explicit + float(self.tail.mass_beyond(self.n_explicit))
        res = sum_atoms(self.abs(), lambda locs: np.zeros(len(locs), complex), budget=budget)
        if res.status != "convergent":
            raise DivergenceError("total variation could not be certified finite", res.ratio_limit)
        return res.value.real


def alpha_measure() -> ComplexMeasure:
    """The measure on the naturals with ``alpha({m}) = 1 / m^2``."""

    def atoms(idx):
        m = idx.astype(float) + 1.0
        return m[:, None], 1.0 / m**2

    return ComplexMeasure(
        np.zeros((0, 1)), np.zeros(0),
        TailRule(atoms, mass_beyond=lambda K: float(polygamma(1, K + 1))),
        dim=1,
    )


# -- atom series --------------------------------------------------------------


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of summing ``int exp(E(v)) d nu(v)`` over atoms.

    ``status`` is ``"convergent"`` when absolute convergence is certified
    (bounded integrand against a finite measure, or ratio limit below 1),
    ``"divergent"`` when the ratio limit exceeds 1, and ``"indeterminate"``
    when the atom budget ran out first.  ``tail_bound`` bounds the truncation
    error of ``value`` when convergent.
    """

    value: complex
    status: str
    n_atoms: int
    tail_bound: float
    ratio_limit: float | None = None


def ratio_limit(log_terms: np.ndarray, index: np.ndarray) -> tuple[float, float]:
    """d'Alembert ratio limit from a window of log-moduli of consecutive terms.

    Returns ``(L, spread)`` where ``spread`` is the relative spread of the raw
    ratios.  ``L`` extrapolates ``log r_k = c0 + c1 / k`` to ``k -> inf``,
    which removes the leading power-law bias of weights like ``1/m^2``.
    """
    log_r = np.diff(log_terms)
    r = np.exp(log_r)
    spread = float((r.max() - r.min()) / r.mean())
    k = index[1:].astype(float) + 1.0
    c0 = np.polyfit(1.0 / k, log_r, 2)[-1]
    return float(math.exp(c0)), spread


def sum_atoms(
    measure: ComplexMeasure,
    exponent: Callable[[np.ndarray], np.ndarray],
    *,
    modulus_bound: float | None = None,
    tol: float = DEFAULT_TAIL_TOL,
    budget: int = DEFAULT_BUDGET,
    first_block: int = 500,
) -> SeriesResult:
    """Sum ``weight * exp(exponent(location))`` over the atoms of ``measure``.

    ``modulus_bound``, if given, is a known bound on ``|exp(exponent)|`` over
    all of R^d; with the measure's tail mass it certifies convergence.
    """
    locs, wts = measure.locations, measure.weights
    value = complex(np.sum(wts * np.exp(exponent(locs)))) if wts.size else 0j
    if measure.tail is None:
        return SeriesResult(value, "convergent", wts.size, 0.0)

    K = measure.n_explicit
    block = first_block
    window_logs = np.empty(0)
    window_idx = np.empty(0, dtype=int)
    certified = False
    tail_bound = math.inf
    L = None
    while K < budget:
        stop = min(K + block, budget)
        tl, tw = measure.tail_atoms(K, stop)
        E = np.asarray(exponent(tl), dtype=complex)
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(tw)) + E.real
        if np.any(logs > 700):
            value = complex("nan")
        else:
            value += complex(np.sum(tw * np.exp(E)))
        K = stop
        window_logs = np.concatenate([window_logs, logs])[-(RATIO_WINDOW + 1):]
        window_idx = np.concatenate([window_idx, np.arange(stop - len(logs), stop)])[-(RATIO_WINDOW + 1):]

        if modulus_bound is not None and measure.tail.mass_beyond is not None:
            certified = True
            tail_bound = modulus_bound * measure.tail.mass_beyond(K)
        elif window_logs.size == RATIO_WINDOW + 1:
            if np.all(np.isneginf(window_logs)):
                certified, tail_bound = True, 0.0
            elif np.all(np.isfinite(window_logs)):
                L, spread = ratio_limit(window_logs, window_idx)
                r = np.exp(np.diff(window_logs))
                if spread < RATIO_SPREAD and L > 1.0 + RATIO_MARGIN:
                    return SeriesResult(value, "divergent", K, math.inf, L)
                # decreasing ratios are bounded by the window maximum; ratios
                # still climbing are bounded by their extrapolated limit
                climbing = r[-1] > r[0] * (1 + 1e-12)
                rate = max(float(r.max()), L + RATIO_MARGIN) if climbing else float(r.max())
                if rate < 1.0 and (not climbing or spread < RATIO_SPREAD):
                    certified = True
                    tail_bound = math.exp(window_logs[-1]) * rate / (1.0 - rate)
        if certified and tail_bound < tol:
            break
        block *= 2

    status = "convergent" if certified else "indeterminate"
    return SeriesResult(value, status, K, tail_bound, L)


# -- cylinder functionals -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class CylinderFunctional:
    """``F(X) = nu_hat((g_j, X(s_k))~)`` on the paths space."""

    G: tuple[CambElement, ...]
    times: PathsTuple
    measure: ComplexMeasure
    kp: KernelPair = field(repr=False)

    def __post_init__(self):
        G = tuple(self.G)
        object.__setattr__(self, "G", G)
        self.times.check(self.kp)
        gram = np.array([[inner_camb(gi, gj, self.kp) for gj in G] for gi in G])
        if np.max(np.abs(gram - np.eye(len(G)))) > 1e-8:
            raise ValueError("G is not orthonormal to 1e-8")
        if self.measure.dim != self.m * self.n:
            raise ValueError(f"measure lives on R^{self.measure.dim}, need R^{self.m * self.n}")
        object.__setattr__(self, "_ga", np.array([pair_with_a(g, self.kp) for g in G]))
        object.__setattr__(self, "_db", self.times.b_increments(self.kp))

    @property
    def m(self) -> int:
        return len(self.G)

    @property
    def n(self) -> int:
        return self.times.n

    @property
    def g_dot_a(self) -> np.ndarray:
        """``(g_j, a)`` for each ``j``."""
        return self._ga

    def quadratic(self, locs: np.ndarray) -> np.ndarray:
        """``sum_j sum_l [b(s_l) - b(s_{l-1})] (sum_{k>=l} v_{j,k})^2`` per atom."""
        v = locs.reshape(-1, self.m, self.n)
        tails = np.cumsum(v[:, :, ::-1], axis=2)[:, :, ::-1]
        return np.einsum("kjl,l->k", tails**2, self._db)

    def linear(self, locs: np.ndarray) -> np.ndarray:
        """``sum_{j,k} (g_j, a) v_{j,k}`` per atom."""
        v = locs.reshape(-1, self.m, self.n)
        return np.einsum("kjl,j->k", v, self._ga)

    def exponent(self, lam: complex) -> Callable[[np.ndarray], np.ndarray]:
        lam = complex(lam)
        root = 1.0 / cmath.sqrt(lam)
        # -1/(2 lam) built componentwise so its real part is exactly 0 on the
        # imaginary axis; complex division leaves ~1e-16 noise that the
        # quadratic (growing like m^2 for countable measures) would amplify
        d = 2.0 * (lam.real**2 + lam.imag**2)
        coef = complex(-lam.real / d, lam.imag / d)

        def E(locs):
            return coef * self.quadratic(locs) + 1j * root * self.linear(locs)

        return E


def _check_kp(F: CylinderFunctional, kp: KernelPair | None) -> None:
    if kp is not None and not kp.grid.same_as(F.kp.grid):
        raise ValueError("kernel pair differs from the one the functional was built on")


def inv_sqrt(lam: complex) -> complex:
    """``lam^{-1/2}`` on the branch with positive real part."""
    return 1.0 / cmath.sqrt(complex(lam))


def eval_F(F: CylinderFunctional, section: PathsSection, max_atoms: int = 10_000) -> np.ndarray | complex:
    """Evaluate the functional on a (possibly batched) section."""
    if section.times != F.times:
        raise ValueError("section paths-times do not match the functional")
    u = np.stack([np.stack([pwz(g, section[k]) for k in range(F.n)], axis=-1) for g in F.G], axis=-2)
    batch = u.shape[:-2]
    u = np.asarray(u).reshape(-1, F.m * F.n)
    locs, wts = F.measure.atoms(max_atoms)
    if not F.measure.is_finite:
        log.warning("evaluating a countable measure truncated to %d atoms", len(wts))
    out = np.exp(1j * (u @ locs.T)) @ wts
    return complex(out[0]) if batch == () else out.reshape(batch)


def analytic_J(F: CylinderFunctional, lam: complex, kp: KernelPair | None = None, **series_kw) -> complex:
    """The analytic paths-space integral at ``lam`` with ``Re(lam) > 0``."""
    _check_kp(F, kp)
    lam = complex(lam)
    if not lam.real > 0:
        raise DomainError(f"need Re(lambda) > 0, got {lam}")
    bound = 1.0 if np.all(F.g_dot_a == 0.0) else None
    res = sum_atoms(F.measure, F.exponent(lam), modulus_bound=bound, **series_kw)
    if res.status == "divergent":
        raise DivergenceError(f"atom series diverges (ratio limit {res.ratio_limit:.6g})", res.ratio_limit)
    if res.status == "indeterminate":
        log.warning("analytic_J: atom budget exhausted without a convergence certificate")
    return res.value


def analytic_J_single_time(F: CylinderFunctional, lam: complex) -> complex:
    """The one-paths-time formula: ``b(s) sum_j v_j^2`` replaces the tail-sum quadratic."""
    if F.n != 1:
        raise ValueError("single-time formula needs n = 1")
    if not F.measure.is_finite:
        raise ValueError("single-time formula is evaluated on finite measures only")
    lam = complex(lam)
    if not lam.real > 0:
        raise DomainError(f"need Re(lambda) > 0, got {lam}")
    bs = F.kp.b_at(F.times.s[0])
    v = F.measure.locations
    E = -bs / (2.0 * lam) * np.sum(v**2, axis=1) + 1j * inv_sqrt(lam) * (v @ F.g_dot_a)
    return complex(np.sum(F.measure.weights * np.exp(E)))


@dataclass(frozen=True)
class FeynmanResult:
    value: complex
    status: str
    q: float
    ratio_limit: float | None
    tail_bound: float
    n_atoms: int

    @property
    def divergent(self) -> bool:
        return self.status == "divergent"

    def to_dict(self) -> dict:
        v = self.value
        return {
            "q": self.q,
            "status": self.status,
            "value": None if self.divergent or cmath.isnan(v) else [v.real, v.imag],
            "ratio_limit": self.ratio_limit,
            "tail_bound": self.tail_bound if math.isfinite(self.tail_bound) else None,
            "n_atoms": self.n_atoms,
        }


def feynman_limit(F: CylinderFunctional, q: float, kp: KernelPair | None = None, **series_kw) -> FeynmanResult:
    """The analytic Feynman integral with parameter ``q`` (the value at ``lam = -i q``).

    Finite measures always give a value.  Countable ones are ratio-tested and
    come back with ``status == "divergent"`` and the ratio limit when the
    series does not converge absolutely.
    """
    _check_kp(F, kp)
    if q == 0 or not math.isfinite(q):
        raise DomainError("q must be a nonzero real number")
    bound = 1.0 if np.all(F.g_dot_a == 0.0) else None
    res = sum_atoms(F.measure, F.exponent(complex(0.0, -q)), modulus_bound=bound, **series_kw)
    return FeynmanResult(res.value, res.status, float(q), res.ratio_limit, res.tail_bound, res.n_atoms)


@dataclass(frozen=True)
class Q0Result:
    """Membership in the q0-class.

    ``member`` is ``True``/``False`` when decided and ``None`` when the atom
    budget ran out first.
    """

    member: bool | None
    value: float
    status: str
    ratio_limit: float | None
    n_atoms: int


def q0_condition(F: CylinderFunctional, q0: float, kp: KernelPair | None = None, **series_kw) -> Q0Result:
    """Test ``int exp(||a|| / sqrt(2 q0) * sum |v_{j,k}|) d|nu| < inf``."""
    _check_kp(F, kp)
    if not q0 > 0:
        raise DomainError("q0 must be positive")
    norm_a = F.kp.mean_element().norm(F.kp)
    c = norm_a / math.sqrt(2.0 * q0)
    nu_abs = F.measure.abs()
    if c == 0.0 and (nu_abs.is_finite or nu_abs.tail.mass_beyond is not None):
        tv = nu_abs.total_variation()
        return Q0Result(True, tv, "convergent", None, nu_abs.n_explicit)

    def E(locs):
        return c * np.sum(np.abs(locs), axis=1) + 0j

    res = sum_atoms(nu_abs, E, modulus_bound=1.0 if c == 0.0 else None, **series_kw)
    member = {"convergent": True, "divergent": False}.get(res.status)
    return Q0Result(member, res.value.real, res.status, res.ratio_limit, res.n_atoms)


@dataclass(frozen=True)
class SequenceReport:
    q: float
    lambdas: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)
    final_gap: float
    decreasing: bool
    passed: bool


def feynman_sequence_check(
    F: CylinderFunctional, q: float, kp: KernelPair | None = None, L_count: int = 10_000, tol: float = 1e-6
) -> SequenceReport:
    """Distance from ``J*(-iq + 1/l)`` to the Feynman value for ``l = 1..L_count``.

    ``decreasing`` compares the gaps at ``l = 1, 10, 100, ...``; ``passed``
    requires the last gap to be below ``tol``.
    """
    _check_kp(F, kp)
    if not F.measure.is_finite:
        raise ValueError("sequence check runs on finite measures")
    limit = feynman_limit(F, q).value
    ls = np.arange(1, L_count + 1)
    lams = complex(0.0, -q) + 1.0 / ls
    locs, wts = F.measure.locations, F.measure.weights
    Q, S = F.quadratic(locs), F.linear(locs)
    roots = 1.0 / np.sqrt(lams)
    E = -np.outer(1.0 / (2.0 * lams), Q) + 1j * np.outer(roots, S)
    J = np.exp(E) @ wts
    gaps = np.abs(J - limit)
    decades = gaps[[l - 1 for l in (1, 10, 100, 1000, 10_000, 100_000) if l <= L_count]]
    decreasing = bool(np.all(np.diff(decades) < 0) or np.all(gaps == 0))
    final = float(gaps[-1])
    return SequenceReport(float(q), lams, gaps, final, decreasing, final < tol)


# -- analyticity --------------------------------------------------------------


@dataclass(frozen=True)
class ContourReport:
    residual: complex
    abs_residual: float
    rect: tuple[float, float, float, float]
    method: str


def _corners(rect):
    x0, x1, y0, y1 = rect
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


def contour_integral(f: Callable[[complex], complex], rect, method: str = "adaptive", panels: int = 8) -> complex:
    """Counter-clockwise integral of ``f`` around ``rect = (re0, re1, im0, im1)``."""
    c = _corners(rect)
    total = 0j
    for z0, z1 in zip(c, c[1:] + c[:1]):
        dz = z1 - z0
        if method == "adaptive":
            val, _ = integrate.quad(
                lambda t: f(z0 + t * dz), 0.0, 1.0, complex_func=True, epsabs=1e-15, epsrel=1e-13, limit=200
            )
        elif method == "simpson":
            if panels < 2 or panels % 2:
                raise ValueError("simpson needs an even number of panels")
            t = np.linspace(0.0, 1.0, panels + 1)
            vals = np.array([f(z0 + ti * dz) for ti in t])
            wts = np.ones(panels + 1)
            wts[1:-1:2], wts[2:-1:2] = 4.0, 2.0
            val = np.dot(wts, vals) / (3.0 * panels)
        else:
            raise ValueError(f"unknown method {method!r}")
        total += val * dz
    return total


def contour_analyticity_check(
    F: CylinderFunctional,
    rect=(1.0, 2.0, -0.5, 0.5),
    kp: KernelPair | None = None,
    method: str = "adaptive",
    panels: int = 8,
) -> ContourReport:
    """Integrate ``J*`` around a rectangle in the right half-plane; analyticity makes it vanish."""
    _check_kp(F, kp)
    x0, x1, y0, y1 = map(float, rect)
    if not (0.0 < x0 < x1 and y0 < y1):
        raise DomainError("rectangle must lie strictly inside Re(lambda) > 0")
    res = contour_integral(lambda lam: analytic_J(F, lam), (x0, x1, y0, y1), method, panels)
    return ContourReport(res, abs(res), (x0, x1, y0, y1), method)


def shrink(rect, factor: float = 0.5):
    """Scale a rectangle about its centre."""
    x0, x1, y0, y1 = rect
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    return (cx + factor * (x0 - cx), cx + factor * (x1 - cx), cy + factor * (y0 - cy), cy + factor * (y1 - cy))


# -- summation identity -------------------------------------------------------


def ulp_distance(x: float, y: float) -> int:
    """Number of representable doubles between ``x`` and ``y``."""

    def key(v):
        i = int(np.float64(v).view(np.int64))
        return i if i >= 0 else -(i & 0x7FFFFFFFFFFFFFFF)

    return abs(key(x) - key(y))


def sum_identity_check(A: Sequence[float], B: Sequence[float], max_ulps: int = 8) -> bool:
    """Compare ``sum_k sum_{l<=k} A_l B_k`` with ``sum_l sum_{k>=l} A_l B_k``.

    Both sides visit the same rounded products in different orders; each side
    is accumulated with an exactly rounded sum so only the re-indexing is
    being tested.
    """
    A = [float(v) for v in A]
    B = [float(v) for v in B]
    if len(A) != len(B):
        raise ValueError("A and B must have equal length")
    n = len(A)
    lhs = math.fsum(A[l] * B[k] for k in range(n) for l in range(k + 1))
    rhs = math.fsum(A[l] * B[k] for l in range(n) for k in range(l, n))
    return ulp_distance(lhs, rhs) <= max_ulps


# -- standard constructions -----------------------------------------------------


def functional_from_betas(
    beta_times: Sequence[float], s: Sequence[float], measure: ComplexMeasure, kp: KernelPair
) -> CylinderFunctional:
    """Orthonormalise ``beta_t`` kernels and build a cylinder functional."""
    from .kernel_functions import gram_schmidt

    G = gram_schmidt([beta_kernel(t, kp) for t in beta_times], kp)
    return CylinderFunctional(tuple(G), PathsTuple(tuple(s)), measure, kp)


def alpha_functional(kp: KernelPair, s: float | None = None) -> CylinderFunctional:
    """``F(X) = int exp(i (g, X(s))~ v) d alpha(v)`` with ``g = beta_T / ||beta_T||``."""
    g = beta_kernel(kp.T, kp)
    g = (1.0 / g.norm(kp)) * g
    return CylinderFunctional((g,), PathsTuple((kp.T if s is None else s,)), alpha_measure(), kp)
