import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbmpaths import closed_form as cf
from gbmpaths.kernel_functions import CambElement, KernelPair, beta_kernel, preset
from gbmpaths.paths_space import PathsTuple
from gbmpaths.verification import random_element

# the elements below are beta kernels at grid nodes, for which every inner
# product is exact, so the worked values hold to rounding
TOL = 1e-12


@pytest.fixture(scope="module")
def wiener1():
    return preset("wiener", M=64)


@pytest.fixture(scope="module")
def drifted1():
    return preset("drifted", M=64)


def test_mean_examples(wiener1, drifted1):
    assert cf.mean_pwz(beta_kernel(0.5, wiener1), 0.3, wiener1) == 0.0
    assert cf.mean_pwz(beta_kernel(0.5, drifted1), 0.9, drifted1) == pytest.approx(0.5, abs=TOL)
    sq = preset("curved", M=64)
    assert cf.mean_pwz(beta_kernel(1.0, sq), 0.5, sq) == pytest.approx(1.0, abs=TOL)


def test_second_moment_examples(wiener1):
    assert cf.second_moment_pwz(beta_kernel(1.0, wiener1), 1.0, wiener1) == pytest.approx(1.0, abs=TOL)
    # a(t) = t, b(t) = t + t^2 / 2
    kp = KernelPair.from_functions(
        lambda t: t, lambda t: np.ones_like(t), lambda t: t + t**2 / 2, lambda t: 1 + t, M=64
    )
    assert cf.second_moment_pwz(beta_kernel(0.5, kp), 1.0, kp) == pytest.approx(1.1875, abs=TOL)
    assert cf.second_moment_pwz(CambElement.zero(kp), 1.0, kp) == 0.0


def test_cross_examples(wiener1, drifted1):
    b1 = beta_kernel(1.0, wiener1)
    assert cf.cross_pwz(b1, 1.0, b1, 1.0, wiener1) == pytest.approx(1.0, abs=TOL)
    h = beta_kernel(0.5, drifted1)
    assert cf.cross_pwz(h, 0.25, h, 1.0, drifted1) == pytest.approx(0.375, abs=TOL)
    # beta kernels reduce to the point-product form
    assert cf.cross_pwz(beta_kernel(0.25, drifted1), 0.5, beta_kernel(0.75, drifted1), 0.8, drifted1) == (
        pytest.approx(cf.point_product(0.5, 0.25, 0.8, 0.75, drifted1), abs=TOL)
    )


def test_char_single_examples(wiener1, drifted1):
    assert cf.char_single(beta_kernel(0.5, drifted1), 0.0, 0.5, drifted1) == 1 + 0j
    assert cf.char_single(beta_kernel(1.0, wiener1), 1.0, 1.0, wiener1) == pytest.approx(math.exp(-0.5), abs=TOL)
    assert cf.char_single(beta_kernel(1.0, drifted1), 1.0, 1.0, drifted1) == pytest.approx(
        cmath.exp(-0.5 + 1j), abs=TOL
    )


def test_char_multi_examples(wiener1, drifted1):
    w = beta_kernel(0.6, drifted1)
    one = PathsTuple((0.7,))
    assert cf.char_multi([w], 0.8, one, drifted1) == pytest.approx(cf.char_single(w, 0.8, 0.7, drifted1), abs=TOL)
    two = PathsTuple((0.4, 0.9))
    zero = CambElement.zero(drifted1)
    assert cf.char_multi([w, zero], 0.8, two, drifted1) == pytest.approx(
        cf.char_single(w, 0.8, 0.4, drifted1), abs=TOL
    )
    b1 = beta_kernel(1.0, wiener1)
    assert cf.char_multi([b1, b1], 1.0, PathsTuple((0.5, 1.0)), wiener1) == pytest.approx(math.exp(-1.25), abs=TOL)
    with pytest.raises(ValueError):
        cf.char_multi([w], 1.0, two, drifted1)


@given(st.floats(-20, 20), st.integers(0, 1000))
def test_char_single_bounded(rho, seed):
    kp = preset("curved", M=64)
    w = random_element(kp, np.random.default_rng(seed))
    assert abs(cf.char_single(w, rho, 0.6, kp)) <= 1.0 + 1e-15


@given(st.integers(0, 1000), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_cross_symmetry(seed, s1, s2):
    kp = preset("curved", M=64)
    gen = np.random.default_rng(seed)
    w1, w2 = random_element(kp, gen), random_element(kp, gen)
    assert cf.cross_pwz(w1, s1, w2, s2, kp) == cf.cross_pwz(w2, s2, w1, s1, kp)


def test_s_range_checked(drifted1):
    with pytest.raises(ValueError):
        cf.mean_pwz(beta_kernel(0.5, drifted1), 0.0, drifted1)


def test_moment_spec_round_trip(drifted1):
    spec = cf.MomentSpec.from_dict({"kind": "char_single", "w": 1.0, "rho": 1.0, "s": 1.0})
    assert spec.evaluate(drifted1) == pytest.approx(cmath.exp(-0.5 + 1j), abs=TOL)
    multi = cf.MomentSpec("char_multi", {"ws": [1.0, [{"beta": 1.0, "coef": 1.0}]], "rho": 1.0, "s": [0.5, 1.0]})
    assert abs(multi.evaluate(drifted1)) == pytest.approx(math.exp(-1.25), abs=TOL)


def test_moment_spec_arity():
    with pytest.raises(ValueError, match="missing"):
        cf.MomentSpec("cross_pwz", {"w1": 0.5, "s1": 0.5})
    with pytest.raises(ValueError, match="unknown kind"):
        cf.MomentSpec("variance", {})
