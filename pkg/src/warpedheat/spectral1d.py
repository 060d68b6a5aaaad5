"""Exact spectral theory of the Poschl-Teller operator D_0 = -d^2/dy^2 + Q_0 and the operators D_k.

Q_0(y) = (nu^2 - nu(nu+1) sech^2(y/b)) / b^2. Throughout eta = y/b and z = tanh(eta).
The Jost solutions are
    E_+(mu, y) = T(mu) e^{mu eta} F(-nu, nu+1; 1+mu; (1+z)/2),   E_-(mu, y) = E_+(mu, -y),
and the continuum is parametrised by mu = i p, lambda = (nu^2 + p^2)/b^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil, factorial

import numpy as np
from scipy.special import expit

from .errors import IndexOutOfRange, InvalidParameter, OnSpectrum, PoleAt, TailBoundViolated
from .specfun import _hyp2f1, gamma_ratio, legendre_P_eta, loggamma, rgamma, sinpi

EULER_GAMMA = 0.5772156649015329
ETA_CUT = 18.0


@dataclass(frozen=True)
class PoschlTellerOp:
    nu: float
    b: float = 1.0

    def __post_init__(self):
        if not (self.nu > 0 and self.b > 0):
            raise InvalidParameter("nu and b must be positive")

    @property
    def m2(self):
        """Continuum threshold nu^2/b^2."""
        return self.nu**2 / self.b**2

    @property
    def n_bound(self):
        """Number of bound states, ceil(nu); j = nu for integer nu is excluded."""
        return int(ceil(self.nu - 1e-12))


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    normalizations: np.ndarray
    continuum_threshold: float

    @property
    def discrete(self):
        return [(j, float(l), float(c)) for j, (l, c) in enumerate(zip(self.eigenvalues, self.normalizations))]

    @property
    def n_discrete(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class ScatteringData:
    """T and R of the Poschl-Teller operator and their pole structure."""

    op: PoschlTellerOp
    poles_right: list = field(default_factory=list)
    poles_left: list = field(default_factory=list)

    def T(self, mu):
        return transmission(self.op, mu)

    def R(self, mu):
        return reflection(self.op, mu)

    def C(self, mu):
        t, r = self.T(mu), self.R(mu)
        return np.array([[r, t], [t, r]])


# -- potentials ---------------------------------------------------------------------------

def potential_Q0(op, y):
    y = np.asarray(y, dtype=float)
    return (op.nu**2 - op.nu * (op.nu + 1.0) / np.cosh(y / op.b) ** 2) / op.b**2


def potential_Qk(warp, alpha, mu_k, y):
    """alpha^2 omega'^2 - alpha omega'' + mu_k e^{2 omega}."""
    y = np.asarray(y, dtype=float)
    w1 = warp.omega1(y)
    return alpha**2 * w1 * w1 - alpha * warp.omega2(y) + mu_k * np.exp(2.0 * warp.omega(y))


def potential_Qk_cusp_closed(nu, alpha, b, mu_k, y):
    """Closed form for the cusp warp: (nu^2 - nu(nu+1) sech^2)/b^2 + mu_k cosh^{2 nu/alpha}(y/b)."""
    y = np.asarray(y, dtype=float)
    return (nu**2 - nu * (nu + 1.0) / np.cosh(y / b) ** 2) / b**2 + mu_k * np.cosh(y / b) ** (2.0 * nu / alpha)


# -- discrete spectrum ---------------------------------------------------------------------

def normalization(op, j):
    """c_{0,j} with int psi_{0,j}^2 dy = 1: c^2 = (nu - j) Gamma(2 nu - j + 1) / (j! b)."""
    nu = op.nu
    log_c2 = np.log(nu - j) + loggamma(2 * nu - j + 1).real - np.log(factorial(j)) - np.log(op.b)
    return float(np.exp(0.5 * log_c2))


def discrete_spectrum(op):
    js = np.arange(op.n_bound)
    lam = js * (2 * op.nu - js) / op.b**2
    cs = np.array([normalization(op, int(j)) for j in js])
    return SpectralDecomposition(eigenvalues=lam.astype(float), normalizations=cs, continuum_threshold=op.m2)


def eigenfunction(op, j, y):
    """psi_{0,j}(y) = c_{0,j} P^{-(nu-j)}_nu(tanh(y/b))."""
    if not (0 <= j < op.n_bound) or int(j) != j:
        raise IndexOutOfRange(f"j={j} outside 0..{op.n_bound - 1}")
    eta = np.asarray(y, dtype=float) / op.b
    # evaluate on eta >= 0, where the hypergeometric argument stays below 1/2
    sign = np.where(eta < 0, (-1.0) ** int(j), 1.0)
    return normalization(op, int(j)) * sign * legendre_P_eta(op.nu - j, op.nu, np.abs(eta)).real


# -- scattering ------------------------------------------------------------------------------

def _check_pole(op, mu):
    mu = np.asarray(mu, dtype=complex)
    # poles of Gamma(mu + nu + 1) Gamma(mu - nu)
    for arg in (mu + op.nu + 1.0, mu - op.nu):
        r = np.round(arg.real)
        bad = (np.abs(arg - r) < 1e-10) & (r <= 0)
        if np.any(bad):
            raise PoleAt(complex(np.ravel(mu)[np.ravel(bad)][0]), "T(mu)")


def transmission(op, mu):
    """T(mu) = Gamma(mu+nu+1) Gamma(mu-nu) / (Gamma(mu+1) Gamma(mu))."""
    _check_pole(op, mu)
    nu = op.nu
    out = gamma_ratio([mu + nu + 1.0, mu - nu], [mu + 1.0, mu])
    return out if np.ndim(out) else complex(out)


def reflection(op, mu):
    """R(mu) = sin(pi nu)/sin(pi mu) T(mu), via 1/(sin(pi mu) Gamma(mu)) = Gamma(1-mu)/pi.

    This form is exactly zero for integer nu and has no 0/0 at mu = 0.
    """
    _check_pole(op, mu)
    nu = op.nu
    mu = np.asarray(mu, dtype=complex)
    r1 = np.round((1.0 - mu).real)
    if np.any((np.abs(1.0 - mu - r1) < 1e-10) & (r1 <= 0)):
        raise PoleAt(complex(np.ravel(mu)[0]), "R(mu)")
    s = sinpi(nu).real
    if abs(s) < 1e-8 and abs(nu - round(nu)) < 1e-9:
        out = np.zeros(mu.shape, dtype=complex)
    else:
        out = s / np.pi * gamma_ratio([mu + nu + 1.0, mu - nu, 1.0 - mu], [mu + 1.0])
    return out if np.ndim(out) else complex(out)


def scattering(op, mu):
    return transmission(op, mu), reflection(op, mu)


def scattering_data(op):
    nu = op.nu
    right = [nu - j for j in range(int(np.floor(nu)) + 1) if nu - j > 0]
    two_nu_int = abs(2 * nu - round(2 * nu)) < 1e-12
    left = []
    for m in range(5):
        left.append((-nu - 1 - m, "double" if two_nu_int else "single"))
    for j in range(int(np.floor(nu)) + 1, int(np.floor(nu)) + 6):
        if two_nu_int and j > 2 * nu:
            continue
        left.append((nu - j, "single"))
    return ScatteringData(op=op, poles_right=right, poles_left=left)


def reflection_small_p_constant(op):
    """c in R(ip) = -1 - c i p + O(p^2): psi(nu+1) + psi(-nu) - 2 psi(1)."""
    from .specfun import digamma

    return float((digamma(op.nu + 1.0) + digamma(-op.nu) - 2.0 * digamma(1.0)).real)


# -- Jost solutions, resolvent -------------------------------------------------------------------

def _F_plus(op, mu, eta):
    # F(-nu, nu+1; 1+mu; (1+z)/2) with (1+z)/2 = expit(2 eta), 1 - that = expit(-2 eta)
    return _hyp2f1(-op.nu, op.nu + 1.0, 1.0 + np.asarray(mu, dtype=complex), expit(2.0 * eta), expit(-2.0 * eta))


def jost_E(op, sign, mu, y):
    """E_+(mu, y) for sign=+1, E_-(mu, y) = E_+(mu, -y) for sign=-1."""
    _check_pole(op, mu)
    mu = np.asarray(mu, dtype=complex)
    eta = (1.0 if sign > 0 else -1.0) * np.asarray(y, dtype=float) / op.b
    out = transmission(op, mu) * np.exp(mu * eta) * _F_plus(op, mu, eta)
    return out if np.ndim(out) else complex(out)


def resolvent_G0(op, lam, y, yp):
    """Green function of D_0 - lambda, mu = principal sqrt(nu^2 - lambda b^2)."""
    lam = complex(lam)
    if abs(lam.imag) < 1e-14 and lam.real >= op.m2:
        raise OnSpectrum(f"lambda={lam} lies on the continuous spectrum [{op.m2}, inf)")
    spec = discrete_spectrum(op)
    if np.any(np.abs(spec.eigenvalues - lam) < 1e-10):
        raise OnSpectrum(f"lambda={lam} is a discrete eigenvalue")
    mu = np.sqrt(complex(op.nu**2 - lam * op.b**2))
    if mu.real < 0:
        mu = -mu
    lo, hi = (y, yp) if y <= yp else (yp, y)
    eta, etap = lo / op.b, hi / op.b
    T = transmission(op, mu)
    # b/(2 mu T) E_+(lo) E_-(hi), with one factor T cancelled
    val = op.b * T / (2.0 * mu) * np.exp(mu * (eta - etap)) * _F_plus(op, mu, eta) * _F_plus(op, mu, -etap)
    return complex(val)


def wronskian(op, mu):
    """E_+ E_-' - E_+' E_- = -(2 mu / b) T(mu)."""
    return -2.0 * mu / op.b * transmission(op, mu)


# -- the spectral function W -----------------------------------------------------------------------

def _prefactor(op, p):
    # sinh^2(pi p) / (sinh^2(pi p) + sin^2(pi nu)) = |T(ip)|^2, written to avoid overflow
    s = sinpi(op.nu).real
    if s == 0.0:
        return np.ones_like(np.asarray(p, dtype=float))
    p = np.asarray(p, dtype=float)
    big = np.pi * np.abs(p) > 20
    sh = np.sinh(np.where(big, 0.0, np.pi * p))
    small = sh * sh / (sh * sh + s * s)
    return np.where(big, 1.0 / (1.0 + s * s * 4.0 * np.exp(-2.0 * np.pi * np.abs(p))), small)


def W_diagonal(op, p, y):
    """W(p; y, y) = |T(ip)|^2 [Psi(p, y) + Psi(p, -y)], Psi = |F(-nu, nu+1; 1+ip; (1+z)/2)|^2."""
    p = np.asarray(p, dtype=float)
    eta = np.asarray(y, dtype=float) / op.b
    f1 = _F_plus(op, 1j * p, eta)
    f2 = _F_plus(op, 1j * p, -eta)
    return _prefactor(op, p) * (np.abs(f1) ** 2 + np.abs(f2) ** 2)


def W_offdiag(op, p, y, yp):
    """W(p; y, y') = Re[E_+(ip,y) conj E_+(ip,y') + E_-(ip,y) conj E_-(ip,y')]."""
    p = np.asarray(p, dtype=float)
    mu = 1j * p
    ep = jost_E(op, 1, mu, y) * np.conj(jost_E(op, 1, mu, yp))
    em = jost_E(op, -1, mu, y) * np.conj(jost_E(op, -1, mu, yp))
    return (ep + em).real


def W_large_p(op, p, y):
    """2 - nu(nu+1)(1 - z^2)/p^2, the leading large-p form of W(p; y, y)."""
    z = np.tanh(np.asarray(y, dtype=float) / op.b)
    return 2.0 - op.nu * (op.nu + 1.0) * (1.0 - z * z) / np.asarray(p, dtype=float) ** 2


# -- quadrature helpers ------------------------------------------------------------------------------

def gauss_panels(a, b, width, order=16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    npan = max(1, int(np.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def continuum_pmax(op, t, tol=1e-10):
    """Smallest p_max with e^{-p^2 t/b^2} (2 + eps) p_max/(pi t) below tol, at least sqrt(30/t) max(1, b)."""
    tau = t / op.b**2
    pm = np.sqrt(30.0 / t) * max(1.0, op.b)
    while np.exp(-pm * pm * tau) * 2.01 * pm / (np.pi * t) > tol:
        pm *= 1.1
    return pm


def heat_kernel_U0(op, t, y, yp, tol=1e-10):
    """U_0(t; y, y') from bound states plus the continuum integral of W(p; y, y')."""
    if t <= 0:
        raise InvalidParameter("t must be positive")
    tau = t / op.b**2
    spec = discrete_spectrum(op)
    disc = sum(np.exp(-lam * t) * eigenfunction(op, j, y) * eigenfunction(op, j, yp)
               for j, lam in enumerate(spec.eigenvalues))
    pmax = continuum_pmax(op, t, tol)
    bound = np.exp(-pmax * pmax * tau) * 2.01 * pmax / (np.pi * t)
    if bound > tol:
        raise TailBoundViolated(f"continuum tail bound {bound:g} exceeds {tol:g}")
    width = min(0.5, np.pi / (2.0 + abs(y - yp) / op.b) / 2.0)
    p, w = gauss_panels(0.0, pmax, width)
    integrand = np.exp(-(op.nu**2 + p * p) * tau) * W_offdiag(op, p, y, yp)
    return float(disc + np.sum(w * integrand) / (2.0 * np.pi * op.b))


P_OSCILLATORY = 8.0


@lru_cache(maxsize=64)
def _inner_integral_table(nu, pmax, eta_cut=ETA_CUT):
    """I(p) = int over the line of (W(p; eta, eta) - 2) d eta, on Gauss nodes in p.

    The y-integral converges only conditionally; beyond eta_cut W - 2 is replaced
    by its exact asymptotic oscillation 2 Re[R(ip) e^{-2 i p eta}], whose integral
    is done in closed form. The oscillating part has amplitude |R(ip)| ~ e^{-pi p},
    so above P_OSCILLATORY a coarse eta grid suffices.
    """
    op = PoschlTellerOp(nu, 1.0)
    p, wp = gauss_panels(0.0, pmax, 1.0)
    out = np.empty_like(p)
    pref = _prefactor(op, p)
    R = reflection(op, 1j * p)
    grids = [(p <= P_OSCILLATORY, gauss_panels(0.0, eta_cut, 0.5, order=20)),
             (p > P_OSCILLATORY, gauss_panels(0.0, eta_cut, 1.5, order=16))]
    for mask, (eta, we) in grids:
        idx = np.flatnonzero(mask)
        chunk = max(1, 100_000 // len(eta))
        for s in range(0, len(idx), chunk):
            sel = idx[s:s + chunk]
            mu = 1j * p[sel, None]
            f1 = _F_plus(op, mu, eta[None, :])
            f2 = _F_plus(op, mu, -eta[None, :])
            W = pref[sel, None] * (np.abs(f1) ** 2 + np.abs(f2) ** 2)
            out[sel] = 2.0 * np.sum(we[None, :] * (W - 2.0), axis=1)
    tail = 2.0 * (R * np.exp(-2j * p * eta_cut) / (1j * p)).real
    return p, wp, out + tail


def reflection_at_zero(op):
    """R(0): -1 for non-integer nu, 0 for integer nu (reflectionless)."""
    return 0.0 if abs(sinpi(op.nu).real) < 1e-12 else -1.0


def continuum_trace_scaled(nu, tau, pmax=None):
    """int_0^inf dp/(2 pi) e^{-p^2 tau} I(p) + R(0)/2.

    The constant R(0)/2 is the weight that the oscillatory tail of W - 2 leaves
    at p = 0 (sin(2 p L)/p -> pi delta(p)); it is invisible to a pointwise I(p).
    """
    op = PoschlTellerOp(nu, 1.0)
    if pmax is None:
        pmax = continuum_pmax(op, tau)
    pmax = float(8.0 * np.ceil(pmax / 8.0))
    p, wp, I = _inner_integral_table(float(nu), pmax)
    bound = np.exp(-pmax * pmax * tau) * 2.01 * pmax / (np.pi * tau)
    if bound > 1e-10:
        raise TailBoundViolated(f"continuum tail bound {bound:g} too large")
    return float(np.sum(wp * np.exp(-p * p * tau) * I) / (2.0 * np.pi)) + 0.5 * reflection_at_zero(op)


def regularized_trace_D0(op, t):
    """Tr_reg exp(-t D_0) = sum_j e^{-lambda_j t} + continuum part (free trace removed)."""
    if t <= 0:
        raise InvalidParameter("t must be positive")
    tau = t / op.b**2
    disc = float(np.sum(np.exp(-discrete_spectrum(op).eigenvalues * t)))
    return disc + np.exp(-op.nu**2 * tau) * continuum_trace_scaled(op.nu, tau)


def regularized_trace_small_t(op, t, k_trunc=2):
    """(4 pi)^{-1/2} e^{-t nu^2/b^2} (C_1 t^{1/2} + C_2 t^{3/2}/2)."""
    nu, b = op.nu, op.b
    C = [2 * nu * (nu + 1) / b, 4.0 / 3.0 * nu**2 * (nu + 1) ** 2 / b**3]
    s = sum(C[k - 1] * t ** (k - 0.5) / factorial(k) for k in range(1, k_trunc + 1))
    return (4 * np.pi) ** -0.5 * np.exp(-t * op.m2) * s


def trace_Dk_smallt(warp, alpha, mu_k, t, exact=False):
    """Leading small-t trace of D_k for the cusp warp.

    Default: -b (4 pi t)^{-1/2} [(alpha/nu)(log(mu_k t) - gamma) - 2].
    exact=True: -b (4 pi t)^{-1/2} [(alpha/nu)(log(mu_k t) + gamma) - 2 log 2], which
    follows from int_0^inf exp(-A e^{kappa y}) dy = E_1(A)/kappa.
    """
    if warp.kind != "cusp":
        raise InvalidParameter("trace_Dk_smallt needs the cusp warp")
    nu, b = warp.params["nu"], warp.params["b"]
    r = alpha / nu
    pre = -b * (4 * np.pi * t) ** -0.5
    if exact:
        return pre * (r * (np.log(mu_k * t) + EULER_GAMMA) - 2.0 * np.log(2.0))
    return pre * (r * (np.log(mu_k * t) - EULER_GAMMA) - 2.0)
