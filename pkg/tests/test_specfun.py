import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfrkit import specfun

# reference values from mpmath at 50 digits
J_REF = [
    (0, 0.5, 0.9384698072408129),
    (1, 2.0, 0.5767248077568734),
    (3, 7.5, -0.2580609131934603),
    (10, 11.1, 0.28554478739975614),
    (25, 30.0, 0.08429274064303173),
    (60, 40.0, 1.309267138298199e-07),
    (5, 0.01, 2.604155815991599e-14),
]
Y_REF = [
    (0, 0.5, -0.44451873350670656),
    (1, 2.0, -0.10703243154093754),
    (3, 7.5, 0.15970759193793513),
    (10, 11.1, -0.18140408615968942),
    (2, 30.0, 0.12292410306411385),
    (0, 39.0, 0.0626235337468859),
]
H_REF = [
    (0, 64.0, 0.09259001221604811 + 0.03706710323208833j),
    (1, 300.0, -0.03188743137749995 + 0.03324554812131022j),
    (3, 1000.0, -0.0048274208252039475 + 0.024765269345790947j),
]


@pytest.mark.parametrize("n,x,ref", J_REF)
def test_bessel_j_reference(n, x, ref):
    assert specfun.bessel_j(n, x) == pytest.approx(ref, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("n,x,ref", Y_REF)
def test_bessel_y_reference(n, x, ref):
    assert specfun.bessel_y(n, x) == pytest.approx(ref, rel=1e-11, abs=1e-13)


@pytest.mark.parametrize("n,x,ref", H_REF)
def test_hankel_beyond_table_domain(n, x, ref):
    assert specfun.hankel1(n, x) == pytest.approx(ref, rel=1e-10)


def test_j_trivial_values():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(3, 0.0) == 0.0


def test_first_zero_of_j0():
    assert abs(specfun.bessel_j(0, 2.404825557695773)) < 1e-10


def test_second_zero_of_y0():
    assert abs(specfun.bessel_y(0, 3.957678419314858)) < 1e-8


def test_j_prime_at_origin():
    assert specfun.bessel_j_prime(0, 0.0) == 0.0
    assert specfun.bessel_j_prime(1, 0.0) == pytest.approx(0.5)


def test_j_prime_matches_finite_difference():
    h = 1e-6
    fd = (specfun.bessel_j(2, 1.3 + h) - specfun.bessel_j(2, 1.3 - h)) / (2 * h)
    assert specfun.bessel_j_prime(2, 1.3) == pytest.approx(fd, rel=1e-8)


def test_j_prime_top_order():
    # mpmath derivative of J_60 at 35
    assert specfun.bessel_j_prime(60, 35.0) == pytest.approx(3.375794005229355e-10, rel=1e-10)


def test_y_logarithmic_singularity():
    assert specfun.bessel_y(0, 1e-6) < -8


def test_wronskian():
    x = 2.5
    for n in range(0, 6):
        w = specfun.bessel_j(n + 1, x) * specfun.bessel_y(n, x) - specfun.bessel_j(n, x) * specfun.bessel_y(n + 1, x)
        assert w == pytest.approx(2 / (math.pi * x), abs=1e-9)


def test_hankel_parts():
    h0 = specfun.hankel1(0, 2.0)
    h1 = specfun.hankel1(1, 2.0)
    assert h0.real == specfun.bessel_j(0, 2.0)
    assert h1.imag == specfun.bessel_y(1, 2.0)


def test_hankel_asymptotic_magnitude():
    x = 30.0
    assert abs(specfun.hankel1(0, x)) == pytest.approx(math.sqrt(2 / (math.pi * x)), rel=0.02)


def test_domain_errors():
    with pytest.raises(ValueError):
        specfun.bessel_j(61, 1.0)
    with pytest.raises(ValueError):
        specfun.bessel_j(0, 41.0)
    with pytest.raises(ValueError):
        specfun.bessel_j(0, -1.0)
    with pytest.raises(ValueError):
        specfun.bessel_y(0, 0.0)
    with pytest.raises(ValueError):
        specfun.bessel_j(0, float("nan"))


def test_table_shape_and_vectorisation():
    x = np.array([[0.1, 1.0], [5.0, 20.0]])
    t = specfun.bessel_j_table(4, x)
    assert t.shape == (5, 2, 2)
    assert t[3, 1, 0] == specfun.bessel_j(3, 5.0)


def test_bessel_normalisation_sum():
    x = 5.0
    total = sum(specfun.bessel_j(n, x) ** 2 for n in range(-30, 31))
    assert total <= 1.0 + 1e-15
    assert 1.0 - total < 1e-12


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 20), x=st.floats(0.1, 30.0))
def test_recurrence_property(n, x):
    lhs = specfun.bessel_j(n - 1, x) + specfun.bessel_j(n + 1, x)
    assert abs(lhs - 2 * n / x * specfun.bessel_j(n, x)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(n=st.integers(0, 60), x=st.floats(0.0, 40.0))
def test_parity_exact(n, x):
    assert specfun.bessel_j(-n, x) == (-1) ** n * specfun.bessel_j(n, x)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(0, 30), x=st.floats(0.05, 40.0))
def test_wronskian_property(n, x):
    w = specfun.bessel_j(n + 1, x) * specfun.bessel_y(n, x) - specfun.bessel_j(n, x) * specfun.bessel_y(n + 1, x)
    target = 2 / (math.pi * x)
    assert abs(w - target) <= 1e-9 * max(1.0, abs(specfun.bessel_y(n + 1, x)))
