"""Complex Gamma, digamma, Gauss hypergeometric and associated Legendre functions.

Everything here is vectorised over numpy arrays and works in double precision.
The Gamma function uses the Lanczos rational approximation (g = 7, nine terms)
on Re z >= 1/2 and the reflection formula elsewhere.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import NoConvergence, PoleAt

POLE_TOL = 1e-12
INTEGER_SNAP = 1e-9
SERIES_TOL = 1e-16
MAX_TERMS = 10_000
DEGENERATE_STEP = 1e-3

_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _c(z):
    return np.asarray(z, dtype=complex)


def _near_nonpositive_integer(z, tol=POLE_TOL):
    z = _c(z)
    r = np.round(z.real)
    return (np.abs(z.real - r) < tol) & (np.abs(z.imag) < tol) & (r <= 0)


def _check_poles(z, what):
    bad = np.ravel(_near_nonpositive_integer(z))
    if bad.any():
        raise PoleAt(complex(np.ravel(z)[bad][0]), what)


def sinpi(z):
    """sin(pi z) with exact argument reduction of the real part."""
    z = _c(z)
    n = np.round(z.real)
    w = (z.real - n) + 1j * z.imag
    sign = np.where(np.mod(n, 2) == 0, 1.0, -1.0)
    return sign * np.sin(np.pi * w)


def _log_sinpi(z):
    # log sin(pi z) up to 2 pi i, stable for large |Im z|
    z = _c(z)
    upper = z.imag >= 0
    zz = np.where(upper, z, np.conj(z))
    n = np.round(zz.real)
    w = (zz.real - n) + 1j * zz.imag
    e = np.exp(2j * np.pi * w)
    val = -1j * np.pi * w + np.log((e - 1.0) / 2j) + 1j * np.pi * n
    return np.where(upper, val, np.conj(val))


def _lanczos_loggamma(z):
    # valid for Re z >= 1/2
    zm = z - 1.0
    acc = np.full(z.shape, _LANCZOS[0], dtype=complex)
    for k in range(1, len(_LANCZOS)):
        acc = acc + _LANCZOS[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def loggamma(z):
    """log Gamma(z), correct modulo 2*pi*i (enough for exponentiation).

    Raises PoleAt at nonpositive integers.
    """
    z = _c(z)
    _check_poles(z, "Gamma")
    left = z.real < 0.5
    right_z = np.where(left, 1.0 - z, z)
    lg = _lanczos_loggamma(right_z)
    return np.where(left, np.log(np.pi) - _log_sinpi(np.where(left, z, 0.5)) - lg, lg)


def gamma_complex(z):
    """Gamma(z) for complex z; raises PoleAt within 1e-12 of 0, -1, -2, ..."""
    z = _c(z)
    out = np.exp(loggamma(z))
    return out if out.ndim else complex(out)


def rgamma(z):
    """1/Gamma(z), returning exactly zero at the poles of Gamma."""
    z = _c(z)
    pole = _near_nonpositive_integer(z)
    safe = np.where(pole, 0.5, z)
    out = np.where(pole, 0.0, np.exp(-loggamma(safe)))
    return out if out.ndim else complex(out)


def gamma_ratio(num, den):
    """prod Gamma(num) / prod Gamma(den), computed in log space.

    A pole in the denominator gives exactly zero; a pole in the numerator
    raises PoleAt.
    """
    shape = np.broadcast(*[_c(a) for a in list(num) + list(den)]).shape
    total = np.zeros(shape, dtype=complex)
    zero = np.zeros(shape, dtype=bool)
    for a in num:
        total = total + loggamma(np.broadcast_to(_c(a), shape))
    for a in den:
        a = np.broadcast_to(_c(a), shape)
        pole = _near_nonpositive_integer(a)
        zero |= pole
        total = total - loggamma(np.where(pole, 0.5, a))
    return np.where(zero, 0.0, np.exp(np.where(zero, 0.0, total)))


_DIGAMMA_ASYMP = [1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132,
                  -691.0 / 32760, 1.0 / 12]


def digamma(z):
    """psi(z) = Gamma'(z)/Gamma(z) for complex z."""
    z = _c(z)
    _check_poles(z, "digamma")
    left = z.real < 0.5
    w = np.where(left, 1.0 - z, z)
    acc = np.zeros(w.shape, dtype=complex)
    while True:
        small = np.abs(w) < 12.0
        if not np.any(small):
            break
        acc = acc - np.where(small, 1.0 / w, 0.0)
        w = np.where(small, w + 1.0, w)
    inv2 = 1.0 / (w * w)
    series = np.zeros(w.shape, dtype=complex)
    p = inv2.copy()
    for coef in _DIGAMMA_ASYMP:
        series = series + coef * p
        p = p * inv2
    psi = acc + np.log(w) - 0.5 / w - series
    refl = np.pi * np.cos(np.pi * z) / sinpi(np.where(left, z, 0.5))
    out = np.where(left, psi - refl, psi)
    return out if out.ndim else complex(out)


def _snap_integer(a):
    a = _c(a)
    r = np.round(a.real)
    snap = (np.abs(a.real - r) < INTEGER_SNAP) & (np.abs(a.imag) < INTEGER_SNAP)
    return np.where(snap, r + 0j, a), snap & (r <= 0)


def _series(a, b, c, x):
    """Direct Gauss series; all arguments already broadcast to one shape."""
    term = np.ones(x.shape, dtype=complex)
    total = term.copy()
    below_prev = np.zeros(x.shape, dtype=bool)
    done = np.zeros(x.shape, dtype=bool)
    for n in range(MAX_TERMS):
        term = term * (a + n) * (b + n) / ((c + n) * (n + 1)) * x
        total = total + term
        below = np.abs(term) <= SERIES_TOL * np.abs(total)
        done |= below & below_prev
        below_prev = below
        if done.all():
            return total
    raise NoConvergence(f"hypergeometric series did not converge in {MAX_TERMS} terms")


def _connection(a, b, c, xc):
    """F(a,b;c;1-xc) through the 1 - x transformation (xc = 1 - x <= 1/2)."""
    s = c - a - b
    first = gamma_ratio([c, s], [c - a, c - b]) * _series(a, b, 1.0 - s, xc)
    second = (xc + 0j) ** s * gamma_ratio([c, -s], [a, b]) * _series(c - a, c - b, 1.0 + s, xc)
    return first + second


def _shifted_average(a, b, c, xc, d):
    def avg(h):
        return 0.5 * (_connection(a, b, c + h, xc) + _connection(a, b, c - h, xc))
    return (4.0 * avg(d) - avg(2.0 * d)) / 3.0


def _hyp2f1(a, b, c, x, xc=None):
    a, b, c = _c(a), _c(b), _c(c)
    x = np.asarray(x, dtype=float)
    if xc is None:
        xc = 1.0 - x
    xc = np.asarray(xc, dtype=float)
    a, b, c, x, xc = np.broadcast_arrays(a, b, c, x, xc)
    _check_poles(c, "hyp2f1 (c)")
    # canonical (a, b) order makes F(a, b) and F(b, a) bitwise identical
    swap = (a.real > b.real) | ((a.real == b.real) & (a.imag > b.imag))
    a, b = np.where(swap, b, a), np.where(swap, a, b)
    a, term_a = _snap_integer(a)
    b, term_b = _snap_integer(b)
    terminating = term_a | term_b
    out = np.empty(x.shape, dtype=complex)
    # near x = 1 a terminating polynomial cancels badly; when c - a or c - b is also a
    # nonpositive integer, F = (1-x)^{c-a-b} F(c-a, c-b; c; x) is a short, benign sum
    ca, ta = _snap_integer(c - a)
    cb, tb = _snap_integer(c - b)
    euler = terminating & (x > 0.5) & (ta | tb)
    if np.any(euler):
        e = euler
        out[e] = (xc[e] + 0j) ** (c - a - b)[e] * _series(ca[e], cb[e], c[e], x[e].astype(complex))
    direct = (terminating | (x <= 0.5)) & ~euler
    if np.any(direct):
        out[direct] = _series(a[direct], b[direct], c[direct], x[direct].astype(complex))
    conn = ~direct & ~euler
    if np.any(conn):
        s = (c - a - b)[conn]
        degenerate = _near_nonpositive_integer(-np.abs(s.real) + 1j * s.imag, 1e-6)
        vals = np.empty(s.shape, dtype=complex)
        ac, bc, cc, xcc = a[conn], b[conn], c[conn], xc[conn]
        ok = ~degenerate
        if np.any(ok):
            vals[ok] = _connection(ac[ok], bc[ok], cc[ok], xcc[ok])
        if np.any(degenerate):
            # c - a - b integer: symmetric differences in c, Richardson to O(d^4)
            args = (ac[degenerate], bc[degenerate], cc[degenerate], xcc[degenerate])
            vals[degenerate] = _shifted_average(*args, DEGENERATE_STEP)
        out[conn] = vals
    return out


def hyp2f1(a, b, c, x):
    """Gauss hypergeometric function F(a, b; c; x) for real x in [0, 1).

    a, b, c may be complex (and arrays). For x > 1/2 the 1 - x connection
    formula is used so that both series converge geometrically with ratio <= 1/2.
    Terminating series (a or b a nonpositive integer, within 1e-9) are summed
    directly for any x.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0) | (x_arr >= 1)):
        raise ValueError("hyp2f1 is implemented for 0 <= x < 1 only")
    out = _hyp2f1(a, b, c, x_arr)
    return out if out.ndim else complex(out)


def legendre_P_eta(mu, nu, eta):
    """P^{-mu}_nu(tanh eta), evaluated without forming 1 - tanh(eta).

    Uses ((1-z)/(1+z))^{mu/2} = exp(-mu*eta) and (1-z)/2 = 1/(1+exp(2 eta)).
    """
    mu = _c(mu)
    eta = np.asarray(eta, dtype=float)
    _check_poles(1.0 + mu, "P^{-mu}_nu (1 + mu)")
    x = expit(-2.0 * eta)  # (1 - z)/2
    xc = expit(2.0 * eta)
    f = _hyp2f1(-nu, nu + 1.0, 1.0 + mu, x, xc)
    return rgamma(1.0 + mu) * np.exp(-mu * eta) * f


def legendre_P(mu, nu, z):
    """Associated Legendre function P^{-mu}_nu(z) on the cut (-1, 1).

    P^{-mu}_nu(z) = ((1-z)/(1+z))^{mu/2} F(-nu, nu+1; 1+mu; (1-z)/2) / Gamma(1+mu).
    The base (1-z)/(1+z) is positive, so the power is single valued.
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1):
        raise ValueError("legendre_P requires -1 < z < 1")
    out = legendre_P_eta(mu, nu, np.arctanh(z))
    return out if np.ndim(out) else complex(out)
