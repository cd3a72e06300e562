"""Exact values of the paths-space integrals used as Monte Carlo oracles.

All inner products are the grid inner products of :mod:`kernel_functions`,
so these values are the exact expectations for the discretised process too.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Any, Sequence

from .kernel_functions import CambElement, KernelPair, beta_kernel, inner_camb, pair_with_a
from .paths_space import PathsTuple


def _check_s(kp: KernelPair, *ss: float) -> None:
    for s in ss:
        if not 0.0 < s <= kp.T:
            raise ValueError(f"paths-time {s} outside (0, {kp.T}]")


def mean_pwz(w: CambElement, s: float, kp: KernelPair) -> float:
    """``E (w, X(s))~ = (w, a)``, whatever ``s``."""
    _check_s(kp, s)
    return pair_with_a(w, kp)


def second_moment_pwz(w: CambElement, s: float, kp: KernelPair) -> float:
    """``E [(w, X(s))~]^2 = b(s) ||w||^2 + (w, a)^2``."""
    _check_s(kp, s)
    wa = pair_with_a(w, kp)
    return kp.b_at(s) * inner_camb(w, w, kp) + wa * wa


def cross_pwz(w1: CambElement, s1: float, w2: CambElement, s2: float, kp: KernelPair) -> float:
    """``E (w1, X(s1))~ (w2, X(s2))~ = min(b(s1), b(s2)) (w1, w2) + (w1, a)(w2, a)``."""
    _check_s(kp, s1, s2)
    bmin = min(kp.b_at(s1), kp.b_at(s2))
    return bmin * inner_camb(w1, w2, kp) + pair_with_a(w1, kp) * pair_with_a(w2, kp)


def point_product(s1: float, t1: float, s2: float, t2: float, kp: KernelPair) -> float:
    """``E X(s1)(t1) X(s2)(t2)``; state-times snap to the grid."""
    _check_s(kp, s1, s2)
    i1, i2 = kp.grid.index(t1), kp.grid.index(t2)
    return min(kp.b_at(s1), kp.b_at(s2)) * min(kp.b[i1], kp.b[i2]) + kp.a[i1] * kp.a[i2]


def char_single(w: CambElement, rho: float, s: float, kp: KernelPair) -> complex:
    """``E exp(i rho (w, X(s))~)``."""
    _check_s(kp, s)
    return cmath.exp(-0.5 * rho**2 * kp.b_at(s) * inner_camb(w, w, kp) + 1j * rho * pair_with_a(w, kp))


def char_multi(ws: Sequence[CambElement], rho: float, times: PathsTuple, kp: KernelPair) -> complex:
    """``E exp(i rho sum_k (w_k, X(s_k))~)``.

    The quadratic part weights the tail sums ``w_k + ... + w_n`` by the
    increments ``b(s_k) - b(s_{k-1})``.
    """
    ws = list(ws)
    if len(ws) != times.n:
        raise ValueError(f"{len(ws)} elements for {times.n} paths-times")
    db = times.b_increments(kp)
    quad = 0.0
    tail = CambElement.zero(kp)
    for k in range(times.n - 1, -1, -1):
        tail = tail + ws[k]
        quad += 0.5 * db[k] * inner_camb(tail, tail, kp)
    lin = sum(pair_with_a(w, kp) for w in ws)
    return cmath.exp(-(rho**2) * quad + 1j * rho * lin)


# -- JSON-driven evaluation ---------------------------------------------------

KINDS = {
    "mean_pwz": ("w", "s"),
    "second_moment_pwz": ("w", "s"),
    "cross_pwz": ("w1", "s1", "w2", "s2"),
    "point_product": ("s1", "t1", "s2", "t2"),
    "char_single": ("w", "rho", "s"),
    "char_multi": ("ws", "rho", "s"),
}


def element_from_spec(spec: Any, kp: KernelPair) -> CambElement:
    """Build an element from JSON.

    Accepted forms: a number ``t`` (the kernel ``beta_t``), ``{"beta": t}``,
    ``{"beta": t, "coef": c}``, or a list of such forms, which is summed.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return beta_kernel(float(spec), kp)
    if isinstance(spec, dict):
        unknown = set(spec) - {"beta", "coef"}
        if "beta" not in spec or unknown:
            raise ValueError(f"element spec needs 'beta' (and optional 'coef'), got {sorted(spec)}")
        return float(spec.get("coef", 1.0)) * beta_kernel(float(spec["beta"]), kp)
    if isinstance(spec, list) and spec:
        out = element_from_spec(spec[0], kp)
        for item in spec[1:]:
            out = out + element_from_spec(item, kp)
        return out
    raise ValueError(f"cannot build an element from {spec!r}")


@dataclass(frozen=True)
class MomentSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; choose from {sorted(KINDS)}")
        need = set(KINDS[self.kind])
        have = set(self.params)
        if need != have:
            raise ValueError(
                f"{self.kind} takes parameters {sorted(need)}; missing {sorted(need - have)}, "
                f"unexpected {sorted(have - need)}"
            )

    @classmethod
    def from_dict(cls, doc: dict) -> "MomentSpec":
        if "kind" not in doc:
            raise ValueError("moment spec needs a 'kind'")
        return cls(doc["kind"], {k: v for k, v in doc.items() if k != "kind"})

    def evaluate(self, kp: KernelPair) -> float | complex:
        p = self.params
        el = lambda key: element_from_spec(p[key], kp)  # noqa: E731
        if self.kind == "mean_pwz":
            return mean_pwz(el("w"), p["s"], kp)
        if self.kind == "second_moment_pwz":
            return second_moment_pwz(el("w"), p["s"], kp)
        if self.kind == "cross_pwz":
            return cross_pwz(el("w1"), p["s1"], el("w2"), p["s2"], kp)
        if self.kind == "point_product":
            return point_product(p["s1"], p["t1"], p["s2"], p["t2"], kp)
        if self.kind == "char_single":
            return char_single(el("w"), p["rho"], p["s"], kp)
        ws = [element_from_spec(item, kp) for item in p["ws"]]
        return char_multi(ws, p["rho"], PathsTuple(tuple(p["s"])), kp)
