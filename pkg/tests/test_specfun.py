import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from warpedheat import specfun as sf
from warpedheat.errors import PoleAt


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.parametrize("z", [0.5, 5, 1 + 1j, -2.5 + 0.3j, 0.1 - 7j, 30 + 20j, -10.3, 3 - 40j, 49.0])
def test_gamma_against_mpmath(z):
    assert rel(sf.gamma_complex(z), complex(mp.gamma(z))) <= 1e-12


def test_gamma_trivial_values():
    assert sf.gamma_complex(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert sf.gamma_complex(5) == pytest.approx(24.0, rel=1e-14)


@pytest.mark.parametrize("z", [0, -1, -7, -3 + 1e-13])
def test_gamma_poles(z):
    with pytest.raises(PoleAt) as info:
        sf.gamma_complex(z)
    assert info.value.z == pytest.approx(z, abs=1e-12)


def test_rgamma_is_zero_at_poles():
    assert sf.rgamma(-3) == 0
    assert sf.rgamma(2.5) == pytest.approx(1 / math.gamma(2.5), rel=1e-14)


def test_gamma_ratio_denominator_pole_gives_zero():
    assert sf.gamma_ratio([2.5], [-2]) == 0
    assert sf.gamma_ratio([4.0], [2.0]) == pytest.approx(6.0, rel=1e-14)


@given(st.floats(-9.7, 9.7).filter(lambda x: abs(x - round(x)) > 1e-3), st.floats(-5, 5))
def test_gamma_reflection(x, y):
    z = complex(x, y)
    val = sf.gamma_complex(z) * sf.gamma_complex(1 - z) * sf.sinpi(z) / math.pi
    assert abs(val - 1) <= 1e-10


@given(st.floats(0.1, 20), st.floats(-10, 10))
def test_gamma_recurrence(x, y):
    z = complex(x, y)
    assert rel(sf.gamma_complex(z + 1), z * sf.gamma_complex(z)) <= 1e-12


def test_digamma_values():
    g = 0.5772156649015329
    assert sf.digamma(1) == pytest.approx(-g, abs=1e-14)
    assert sf.digamma(2) == pytest.approx(1 - g, abs=1e-14)
    assert sf.digamma(0.5) == pytest.approx(-g - 2 * math.log(2), abs=1e-14)


@pytest.mark.parametrize("z", [0.5, 2.2 + 3j, -2.5 + 0.3j, 0.1 - 7j, 30 + 20j, -10.3, 45.0])
def test_digamma_against_mpmath(z):
    assert rel(sf.digamma(z), complex(mp.digamma(z))) <= 1e-10


def test_digamma_matches_numeric_derivative_of_loggamma():
    h = 1e-5
    z = 0.5
    d = (sf.loggamma(z + h) - sf.loggamma(z - h)) / (2 * h)
    assert abs(d - sf.digamma(z)) < 1e-8


def test_digamma_pole():
    with pytest.raises(PoleAt):
        sf.digamma(-2)


def test_hyp2f1_trivial():
    assert sf.hyp2f1(0.3 + 1j, -2.2, 1.7, 0.0) == 1
    assert sf.hyp2f1(-1, 2, 1, 0.3) == pytest.approx(0.4, abs=1e-15)


def hp_series(a, b, c, x, terms=10_000):
    """Direct Gauss series at 40 digits, summed until terms are negligible."""
    a, b, c, x = mp.mpc(a), mp.mpc(b), mp.mpc(c), mp.mpf(x)
    term, total = mp.mpc(1), mp.mpc(1)
    for n in range(terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x
        total += term
        if abs(term) < mp.mpf(10) ** -35:
            break
    return complex(total)


def test_hyp2f1_high_precision_series_oracle():
    assert abs(sf.hyp2f1(-2.5, 3.5, 1 + 1j, 0.7) - hp_series(-2.5, 3.5, 1 + 1j, 0.7)) <= 1e-10


@pytest.mark.parametrize("args", [
    (0.3, 0.7, 1.2, 0.95), (-1.5, 2.5, 1 + 2j, 0.999), (1.2, -0.2, 1, 0.8),
    (-1.3, 2.3, 1 + 0.5j, 0.6), (-1.5, 2.5, 1.0, 0.9),  # c - a - b = 0: degenerate connection
    (-0.5, 1.5, 2.0, 0.97),  # c - a - b = 1
])
def test_hyp2f1_against_mpmath(args):
    a, b, c, x = args
    assert abs(sf.hyp2f1(a, b, c, x) - complex(mp.hyp2f1(a, b, c, x))) <= 1e-10


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.3, 4), st.floats(0, 0.95))
def test_hyp2f1_symmetric_in_ab(a, b, c, x):
    assert sf.hyp2f1(a, b, c, x) == sf.hyp2f1(b, a, c, x)


def test_connection_formula_consistent_with_series():
    a, b, c = -1.3 + 0.2j, 2.3, 1 + 0.5j
    x = 0.6
    direct = sf._series(*np.broadcast_arrays(np.complex128(a), np.complex128(b), np.complex128(c),
                                             np.complex128(x)))
    conn = sf._connection(np.complex128(a), np.complex128(b), np.complex128(c), np.float64(1 - x))
    assert abs(complex(direct) - complex(conn)) <= 1e-9


def test_hyp2f1_rejects_outside_domain():
    with pytest.raises(ValueError):
        sf.hyp2f1(1, 1, 1, 1.0)


def test_hyp2f1_c_pole():
    with pytest.raises(PoleAt):
        sf.hyp2f1(0.5, 0.5, -2, 0.3)


@pytest.mark.parametrize("nu,poly", [
    (0, lambda z: 1.0), (1, lambda z: z), (2, lambda z: (3 * z * z - 1) / 2),
    (3, lambda z: (5 * z**3 - 3 * z) / 2),
])
def test_legendre_reduces_to_polynomials(nu, poly):
    for z in np.linspace(-0.99, 0.99, 23):
        assert abs(sf.legendre_P(0, nu, z) - poly(z)) <= 1e-12


def test_legendre_from_defining_formula_oracle():
    mu, nu, z = -1.5, 2.5, 0.3
    ref = (mp.mpf(1 - z) / (1 + z)) ** (mp.mpf(mu) / 2) * mp.hyp2f1(-nu, nu + 1, 1 + mu, mp.mpf(1 - z) / 2) \
        / mp.gamma(1 + mu)
    assert abs(sf.legendre_P(mu, nu, z) - complex(ref)) <= 1e-9


@pytest.mark.parametrize("mu", [0.5, 1.5 + 0.7j, 2.0, 0.3j])
def test_legendre_complex_order_against_mpmath(mu):
    nu = 1.5
    for z in (-0.999, -0.4, 0.1, 0.55, 0.999):
        ref = complex(mp.legenp(nu, -mu, z, type=2))
        assert abs(sf.legendre_P(mu, nu, z) - ref) <= 1e-9 * max(1.0, abs(ref))


@given(st.floats(0.05, math.pi - 0.05), st.floats(0.2, 4.0))
def test_legendre_half_order_closed_form(theta, nu):
    # P^{-1/2}_nu(cos theta) = sqrt(2/(pi sin theta)) sin((nu + 1/2) theta) / (nu + 1/2)
    ref = math.sqrt(2 / (math.pi * math.sin(theta))) * math.sin((nu + 0.5) * theta) / (nu + 0.5)
    assert abs(sf.legendre_P(0.5, nu, math.cos(theta)) - ref) <= 1e-10


def test_legendre_eta_large_argument_is_finite():
    # P^{-nu}_nu(tanh eta) = sech(eta)^nu / (2^nu Gamma(1 + nu))
    v = sf.legendre_P_eta(1.5, 1.5, np.array([-30.0, 30.0]))
    expected = math.cosh(30.0) ** -1.5 / (2**1.5 * math.gamma(2.5))
    assert np.all(np.isfinite(v))
    for val in v:
        assert cmath.isclose(val, expected, rel_tol=1e-9)


@pytest.mark.parametrize("mu,nu", [(3.0, 3.0), (2.0, 3.0), (1.0, 3.0), (2.5, 2.5), (0.5, 1.5)])
def test_legendre_eta_negative_tail_relative_accuracy(mu, nu):
    # terminating cases near x = 1 must not lose the tiny tail value to cancellation
    for eta in (-10.0, -25.0):
        with mp.workdps(60):
            want = complex(mp.legenp(nu, -mu, mp.tanh(mp.mpf(eta)), type=2))
        got = complex(sf.legendre_P_eta(mu, nu, eta))
        assert abs(got - want) <= 1e-12 * abs(want)
