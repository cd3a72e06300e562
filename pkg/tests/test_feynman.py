import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbmpaths import feynman as fy
from gbmpaths import paths_space as ps
from gbmpaths.feynman import ComplexMeasure, TailRule
from gbmpaths.kernel_functions import beta_kernel, preset
from gbmpaths.rng import RngStream
from gbmpaths.verification import functional_corpus


def single_atom(kp, v=1.0, s=1.0, w=1.0):
    return fy.functional_from_betas([kp.T], [s], ComplexMeasure.point_masses([[v]], [w]), kp)


def unit(kp, m=2, n=2):
    return fy.functional_from_betas([0.4, 0.9][:m], [0.5, 1.0][:n], ComplexMeasure.unit_mass(m * n), kp)


def test_measure_shape_checks():
    with pytest.raises(ValueError):
        ComplexMeasure(np.zeros((2, 3)), [1.0])
    with pytest.raises(ValueError):
        ComplexMeasure.point_masses([[np.nan]], [1.0])


def test_functional_rejects_wrong_dimension(drifted):
    with pytest.raises(ValueError, match="R\\^"):
        fy.functional_from_betas([0.5, 1.0], [1.0], ComplexMeasure.unit_mass(1), drifted)


def test_functional_rejects_non_orthonormal(drifted):
    with pytest.raises(ValueError, match="orthonormal"):
        fy.CylinderFunctional((beta_kernel(0.5, drifted),), ps.PathsTuple((1.0,)), ComplexMeasure.unit_mass(1), drifted)


def test_unit_mass_everywhere(drifted):
    F = unit(drifted)
    sec = ps.sample_section(F.times, drifted, RngStream(0), size=5)
    assert np.allclose(fy.eval_F(F, sec), 1.0)
    assert fy.analytic_J(F, 0.7 + 0.3j) == 1.0
    assert fy.feynman_limit(F, -2.0).value == 1.0
    assert fy.feynman_sequence_check(F, 1.0, L_count=100).final_gap == 0.0
    assert fy.contour_analyticity_check(F).abs_residual <= 1e-14


def test_eval_F_single_atom(drifted):
    F = single_atom(drifted, v=0.7)
    sec = ps.sample_section(F.times, drifted, RngStream(1))
    u = ps.pwz_at(F.G[0])(sec)
    assert fy.eval_F(F, sec) == pytest.approx(cmath.exp(0.7j * u), abs=1e-14)


def test_eval_F_bounded_by_total_variation(curved):
    for F in functional_corpus(curved, seed=3):
        sec = ps.sample_section(F.times, curved, RngStream(2), size=100)
        assert np.all(np.abs(fy.eval_F(F, sec)) <= F.measure.total_variation() * (1 + 1e-12))


def test_analytic_J_examples(wiener, drifted):
    assert fy.analytic_J(single_atom(wiener), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-14)
    F = single_atom(drifted)
    ga = F.g_dot_a[0]
    assert fy.analytic_J(F, 2.0) == pytest.approx(cmath.exp(-0.25 + 1j * ga / math.sqrt(2)), abs=1e-14)


def test_domain_errors(drifted):
    F = single_atom(drifted)
    for lam in (0.0, -1.0, 1j):
        with pytest.raises(fy.DomainError):
            fy.analytic_J(F, lam)
    with pytest.raises(fy.DomainError):
        fy.feynman_limit(F, 0.0)
    with pytest.raises(fy.DomainError):
        fy.contour_analyticity_check(F, (0.0, 1.0, -1.0, 1.0))
    with pytest.raises(fy.DomainError):
        fy.q0_condition(F, -1.0)


def test_inv_sqrt_branch():
    for q in (1.0, -1.0, 2.5, -0.3):
        expected = (1 + 1j * math.copysign(1.0, q)) / math.sqrt(2 * abs(q))
        assert fy.inv_sqrt(complex(0, -q)) == pytest.approx(expected, abs=1e-15)


@given(st.floats(0.01, 100), st.floats(-100, 100))
def test_inv_sqrt_positive_real_part(x, y):
    assert fy.inv_sqrt(complex(x, y)).real > 0


def test_feynman_limit_wiener_example(wiener):
    res = fy.feynman_limit(single_atom(wiener), 1.0)
    assert res.status == "convergent"
    assert res.value == pytest.approx(complex(math.cos(0.5), -math.sin(0.5)), abs=1e-14)


def test_feynman_conjugate_mirror(drifted):
    nu = ComplexMeasure.point_masses([[0.8, -0.3], [-0.8, 0.3]], [0.5, 0.5])
    F = fy.functional_from_betas([1.0], [0.4, 1.0], nu, drifted)
    assert fy.feynman_limit(F, -1.0).value == pytest.approx(fy.feynman_limit(F, 1.0).value.conjugate(), abs=1e-14)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 1.3 - 0.4j])
def test_single_time_formula_matches(curved, lam):
    for F in functional_corpus(curved, seed=11, count=8):
        if F.n != 1:
            continue
        a, b = fy.analytic_J(F, lam), fy.analytic_J_single_time(F, lam)
        assert fy.ulp_distance(a.real, b.real) <= 8 and fy.ulp_distance(a.imag, b.imag) <= 8


def test_alpha_divergence(drifted):
    F = fy.alpha_functional(drifted.scaled_drift(-1.0))
    ga = F.g_dot_a[0]
    assert ga < 0
    res = fy.feynman_limit(F, 1.0)
    assert res.divergent
    assert res.ratio_limit == pytest.approx(math.exp(-ga / math.sqrt(2)), rel=1e-6)
    assert res.to_dict()["value"] is None


def test_alpha_wiener_converges(wiener):
    res = fy.feynman_limit(fy.alpha_functional(wiener), 1.0)
    assert res.status == "convergent"
    assert abs(res.value) <= math.pi**2 / 6


def test_alpha_analytic_J_converges_for_real_lambda(drifted):
    # the Gaussian factor wins at real lambda even with drift
    F = fy.alpha_functional(drifted.scaled_drift(-1.0))
    assert math.isfinite(abs(fy.analytic_J(F, 1.0)))


def test_divergence_error_from_analytic_J(drifted):
    # a measure growing geometrically diverges wherever it is evaluated
    tail = TailRule(lambda idx: (np.zeros((idx.size, 1)), 2.0 ** (idx / 100.0)))
    F = fy.CylinderFunctional(
        single_atom(drifted).G, ps.PathsTuple((1.0,)), ComplexMeasure(np.zeros((0, 1)), [], tail, 1), drifted
    )
    with pytest.raises(fy.DivergenceError) as err:
        fy.analytic_J(F, 1.0)
    assert err.value.ratio_limit == pytest.approx(2 ** 0.01, rel=1e-9)


def test_q0_finite_measure(drifted):
    F = fy.functional_from_betas([0.5, 1.0], [1.0], ComplexMeasure.point_masses([[1.0, -2.0], [0.5, 0.0]], [0.3j, -0.2]), drifted)
    res = fy.q0_condition(F, 2.0)
    c = drifted.mean_element().norm(drifted) / math.sqrt(4.0)
    assert res.member is True
    assert res.value == pytest.approx(0.3 * math.exp(3 * c) + 0.2 * math.exp(0.5 * c), rel=1e-14)


def test_q0_alpha(wiener, drifted):
    zero = fy.q0_condition(fy.alpha_functional(wiener), 1.0)
    assert zero.member is True and zero.value == pytest.approx(math.pi**2 / 6, abs=1e-9)
    assert fy.q0_condition(fy.alpha_functional(drifted), 1.0).member is False


def test_q0_indeterminate_is_not_false(wiener):
    # 1/m^2 with no known tail mass and a ratio creeping up to 1 cannot be decided
    tail = TailRule(lambda idx: ((idx + 1.0)[:, None], 1.0 / (idx + 1.0) ** 2))
    F = fy.CylinderFunctional(single_atom(wiener).G, ps.PathsTuple((1.0,)), ComplexMeasure(np.zeros((0, 1)), [], tail, 1), wiener)
    res = fy.q0_condition(F, 1.0, budget=5000)
    assert res.member is None and res.status == "indeterminate"


def test_sequence_unit_gap_zero_and_rate(curved):
    F = functional_corpus(curved, seed=7)[0]
    q = 1.0
    rep = fy.feynman_sequence_check(F, q, L_count=10_000)
    assert rep.decreasing
    # first-order convergence: l * gap tends to |dJ*/dlambda| at -iq
    lam = complex(0, -q)
    locs, wts = F.measure.locations, F.measure.weights
    Q, S = F.quadratic(locs), F.linear(locs)
    E = F.exponent(lam)(locs)
    dE = Q / (2 * lam**2) - 0.5j * lam**-1.5 * S
    deriv = abs(np.sum(wts * np.exp(E) * dE))
    assert rep.final_gap * 10_000 == pytest.approx(deriv, rel=1e-3)


def test_contour_corpus_adaptive(curved):
    for F in functional_corpus(curved, seed=5):
        assert fy.contour_analyticity_check(F).abs_residual <= 1e-8


def test_contour_shrink_order(drifted):
    nu = ComplexMeasure.point_masses([[3.0], [-2.0]], [0.5, 0.5j])
    F = fy.functional_from_betas([1.0], [1.0], nu, drifted)
    rect = (1.0, 2.0, -0.5, 0.5)
    big = fy.contour_analyticity_check(F, rect, method="simpson", panels=2).abs_residual
    small = fy.contour_analyticity_check(F, fy.shrink(rect, 0.5), method="simpson", panels=2).abs_residual
    assert big > 1e-10
    assert small <= big / 4


def test_simpson_needs_even_panels():
    with pytest.raises(ValueError):
        fy.contour_integral(lambda z: z, (1, 2, 0, 1), method="simpson", panels=3)


def test_sum_identity_examples():
    assert fy.sum_identity_check([2.5], [4.0])
    assert fy.sum_identity_check(np.ones(5), np.ones(5))
    gen = np.random.default_rng(7)
    assert fy.sum_identity_check(gen.normal(size=7), gen.normal(size=7))
    with pytest.raises(ValueError):
        fy.sum_identity_check([1.0], [1.0, 2.0])


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=16))
def test_sum_identity_property(pairs):
    A, B = zip(*pairs)
    assert fy.sum_identity_check(A, B)


def test_ulp_distance():
    assert fy.ulp_distance(1.0, np.nextafter(1.0, 2.0)) == 1
    assert fy.ulp_distance(-0.0, 0.0) == 0
    assert fy.ulp_distance(np.nextafter(0.0, -1.0), np.nextafter(0.0, 1.0)) == 2


@pytest.mark.parametrize("scale", [0.5, 1.0])
def test_alpha_positive_drift_converges(drifted, scale):
    # ratios climb to exp(-(g,a)/sqrt(2q)) < 1, so the tail is geometric
    F = fy.alpha_functional(drifted.scaled_drift(scale))
    res = fy.feynman_limit(F, 1.0)
    assert res.status == "convergent" and res.tail_bound < 1e-12
    m = np.arange(1, 200, dtype=float)
    exact = np.sum(np.exp(F.exponent(-1j)(m[:, None])) / m**2)
    assert res.value == pytest.approx(exact, abs=1e-12)


def test_feynman_exponent_real_part_vanishes(drifted):
    F = fy.alpha_functional(drifted)
    E = F.exponent(-1j)(np.array([[1e6]]))
    quad_re = E.real - (np.real(1j * fy.inv_sqrt(-1j)) * F.linear(np.array([[1e6]])))
    assert quad_re[0] == 0.0
