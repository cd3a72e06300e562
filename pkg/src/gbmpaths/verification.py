"""Cross-check tables: Monte Carlo paths-space integrals against closed forms."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import closed_form as cf
from . import paths_space as ps
from .feynman import ComplexMeasure, CylinderFunctional, functional_from_betas
from .kernel_functions import KernelPair, beta_kernel
from .rng import RngStream

CSV_COLUMNS = ("example_id", "closed_form", "mc_estimate", "stderr", "z_score", "pass")


@dataclass(frozen=True)
class Row:
    example_id: str
    closed_form: float
    mc_estimate: float | None = None
    stderr: float | None = None
    z_score: float | None = None
    passed: bool = True

    def cells(self) -> list[str]:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [self.example_id, fmt(self.closed_form), fmt(self.mc_estimate), fmt(self.stderr),
                fmt(self.z_score), "true" if self.passed else "false"]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def _mc_rows(example_id: str, exact, est, k_sigma: float) -> list[Row]:
    zs = est.z_scores(exact)
    if isinstance(exact, complex):
        parts = (("re", exact.real, est.mean.real, est.stderr.real, zs[0]),
                 ("im", exact.imag, est.mean.imag, est.stderr.imag, zs[1]))
        return [Row(f"{example_id}.{tag}", e, m, s, z, abs(z) <= k_sigma) for tag, e, m, s, z in parts]
    return [Row(example_id, exact, est.mean, est.stderr, zs[0], abs(zs[0]) <= k_sigma)]


def example_table(
    kp: KernelPair, N: int, seed: int, workers: int = 1, k_sigma: float = 4.0
) -> list[Row]:
    """Worked paths-space moments (ids ex1..ex4), each as MC vs closed form.

    Case ``i`` (in the order listed below) draws from
    ``RngStream(seed).substream(i)``.
    """
    T = kp.T
    w1 = beta_kernel(0.5 * T, kp)
    w2 = beta_kernel(T, kp) - 0.5 * beta_kernel(0.25 * T, kp)
    one = ps.PathsTuple((0.7 * T,))
    two = ps.PathsTuple((0.4 * T, 0.9 * T))
    t1, t2 = 0.3 * T, 0.8 * T
    rho = 1.0
    s1, s2 = two.s

    cases = [
        ("ex1.mean", one, ps.pwz_at(w1), cf.mean_pwz(w1, one.s[0], kp)),
        ("ex1.second_moment", one, ps.product(ps.pwz_at(w1), ps.pwz_at(w1)),
         cf.second_moment_pwz(w1, one.s[0], kp)),
        ("ex2.cross_pwz", two, ps.product(ps.pwz_at(w1, 0), ps.pwz_at(w2, 1)),
         cf.cross_pwz(w1, s1, w2, s2, kp)),
        ("ex2.point_product", two, ps.product(ps.point_at(t1, 0), ps.point_at(t2, 1)),
         cf.point_product(s1, t1, s2, t2, kp)),
        ("ex3.char_single", one, ps.exp_of(ps.pwz_at(w1), 1j * rho), cf.char_single(w1, rho, one.s[0], kp)),
        ("ex4.char_multi", two,
         ps.exp_of(ps.linear_combination([(1.0, ps.pwz_at(w1, 0)), (1.0, ps.pwz_at(w2, 1))]), 1j * rho),
         cf.char_multi([w1, w2], rho, two, kp)),
    ]
    root = RngStream(seed)
    rows: list[Row] = []
    for i, (name, times, f, exact) in enumerate(cases):
        est = ps.mc_paths_integral(f, times, kp, N, root.substream(i), workers=workers)
        rows.extend(_mc_rows(name, exact, est, k_sigma))
    return rows


def random_element(kp: KernelPair, gen: np.random.Generator, n_kernels: int = 3):
    """Random combination of a few ``beta_t`` kernels at grid times."""
    ts = gen.choice(kp.grid.points[1:], size=n_kernels, replace=False)
    coefs = gen.normal(size=n_kernels)
    out = float(coefs[0]) * beta_kernel(float(ts[0]), kp)
    for c, t in zip(coefs[1:], ts[1:]):
        out = out + float(c) * beta_kernel(float(t), kp)
    return out


def functional_corpus(kp: KernelPair, seed: int = 7, count: int = 5, atoms: int = 4) -> list[CylinderFunctional]:
    """Random finite-atom cylinder functionals with ``m, n <= 3``.

    Deterministic in ``seed``.  Atom locations are drawn from N(0, 1) and
    weights are complex with total variation at most 1.
    """
    gen = np.random.default_rng(seed)
    out = []
    T = kp.T
    for _ in range(count):
        m = int(gen.integers(1, 4))
        n = int(gen.integers(1, 4))
        beta_times = sorted(gen.uniform(0.1 * T, T, size=m))
        s = np.sort(gen.choice(np.linspace(0.1 * T, T, 10), size=n, replace=False))
        locs = gen.normal(size=(atoms, m * n))
        w = gen.normal(size=atoms) + 1j * gen.normal(size=atoms)
        w /= np.sum(np.abs(w))
        F = functional_from_betas(beta_times, s, ComplexMeasure.point_masses(locs, w), kp)
        if F.m != m:
            raise RuntimeError("degenerate beta kernels in corpus draw")
        out.append(F)
    return out
