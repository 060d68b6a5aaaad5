"""Spectra, heat traces and zeta values of the cross-section N (sphere or flat torus)."""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np
from scipy import integrate, special

from .errors import (
    CutoffTooLarge,
    InvalidParameter,
    OutsideConvergence,
    TruncationInsufficient,
    UnsupportedCrossSection,
)
from .specfun import digamma

LEVEL_BUDGET = 2_000_000
TRUNCATION_TOL = 1e-12
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class CrossSpectrum:
    """Eigenvalues mu_k with multiplicities d_k of -Laplacian on N, up to ``cutoff``."""

    kind: str
    params: dict
    mu: np.ndarray
    d: np.ndarray
    cutoff: float
    alpha: float
    vol_N: float
    A: tuple = field(default=())

    @property
    def n(self):
        return int(round(2 * self.alpha + 1))

    @property
    def levels(self):
        return list(zip(self.mu.tolist(), self.d.tolist()))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "eigenvalue", "multiplicity"])
        for k, (m, d) in enumerate(self.levels):
            w.writerow([k, f"{m:.17g}", d])
        return buf.getvalue()


@dataclass(frozen=True)
class ZetaValues:
    zeta_at: dict
    zeta0: float
    zeta0_heat: float
    zeta0_numeric: float
    A_coeffs: list


def sphere_volume(n, a):
    alpha = (n - 1) / 2.0
    return float(a ** (2 * alpha) * 2.0 * np.pi ** ((2 * alpha + 1) / 2.0) / special.gamma(alpha + 0.5))


def sphere_multiplicity(n, k):
    if n == 2:
        return 1 if k == 0 else 2
    return (2 * k + n - 2) * factorial(k + n - 3) // (factorial(n - 2) * factorial(k))


def _sphere_A(n, a):
    # integrated local coefficients of S^{n-1}: A_1 = vol R/6, A_2 = vol (5R^2 - 2|Ric|^2 + 2|Riem|^2)/360
    d = n - 1
    vol = sphere_volume(n, a)
    R = d * (d - 1) / a**2
    ric2 = d * (d - 1) ** 2 / a**4
    riem2 = 2.0 * d * (d - 1) / a**4
    return (vol, vol * R / 6.0, vol * (5 * R * R - 2 * ric2 + 2 * riem2) / 360.0)


def sphere_spectrum(n, a, k_max):
    """Levels k = 0..k_max of S^{n-1} with radius a: mu = k(k+n-2)/a^2."""
    if int(n) != n or n < 2 or a <= 0 or k_max < 0:
        raise InvalidParameter("need integer n >= 2, a > 0, k_max >= 0")
    n, k_max = int(n), int(k_max)
    k = np.arange(k_max + 1)
    mu = k * (k + n - 2) / a**2
    d = np.array([sphere_multiplicity(n, int(j)) for j in k], dtype=np.int64)
    return CrossSpectrum(kind="sphere", params={"n": n, "a": float(a), "k_max": k_max}, mu=mu.astype(float),
                         d=d, cutoff=float(mu[-1]), alpha=(n - 1) / 2.0, vol_N=sphere_volume(n, a),
                         A=_sphere_A(n, a))


def _group(values, keys=None, rel=1e-12):
    """Group sorted eigenvalues; exact keys (Fractions) take precedence over tolerance."""
    order = np.argsort(values, kind="stable")
    vals = values[order]
    mus, ds = [], []
    if keys is not None:
        ks = [keys[i] for i in order]
        for key, grp in itertools.groupby(zip(ks, vals), key=lambda kv: kv[0]):
            g = list(grp)
            mus.append(float(key))
            ds.append(len(g))
        return np.array(mus), np.array(ds, dtype=np.int64)
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[start] > rel * max(1.0, abs(vals[start])):
            mus.append(vals[start:i].mean() if vals[start] else 0.0)
            ds.append(i - start)
            start = i
    return np.array(mus), np.array(ds, dtype=np.int64)


def torus_spectrum(radii, norm_cutoff, level_budget=LEVEL_BUDGET):
    """All lattice eigenvalues sum k_j^2/a_j^2 <= norm_cutoff, grouped by value."""
    radii = list(radii)
    if not radii or any(r <= 0 for r in radii) or norm_cutoff <= 0:
        raise InvalidParameter("need nonempty positive radii and a positive cutoff")
    bounds = [int(np.floor(np.sqrt(norm_cutoff) * r)) for r in radii]
    count = int(np.prod([2 * m + 1 for m in bounds], dtype=float))
    if count > level_budget:
        raise CutoffTooLarge(f"enumeration of {count} lattice points exceeds the budget {level_budget}")
    exact = all(isinstance(r, (int, Fraction)) for r in radii)
    grids = np.meshgrid(*[np.arange(-m, m + 1) for m in bounds], indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1)
    inv2 = np.array([1.0 / float(r) ** 2 for r in radii])
    vals = (ks.astype(float) ** 2) @ inv2
    keep = vals <= norm_cutoff * (1 + 1e-14)
    ks, vals = ks[keep], vals[keep]
    keys = None
    if exact:
        inv2q = [Fraction(1) / Fraction(r) ** 2 for r in radii]
        keys = [sum(int(k) ** 2 * q for k, q in zip(row, inv2q)) for row in ks]
    mu, d = _group(vals, keys)
    if mu[0] != 0:
        mu[0] = 0.0
    vol = float((2 * np.pi) ** len(radii) * np.prod([float(r) for r in radii]))
    return CrossSpectrum(kind="torus", params={"radii": [float(r) for r in radii], "exact": exact},
                         mu=mu, d=d, cutoff=float(norm_cutoff), alpha=len(radii) / 2.0, vol_N=vol,
                         A=(vol, 0.0, 0.0))


def weyl_constants(spec):
    """c0, c1 in the smooth counting function N(x) = c0 x^alpha + c1 x^(alpha-1) + ..."""
    al = spec.alpha
    pref = (4 * np.pi) ** (-al)
    c0 = pref * spec.A[0] / special.gamma(al + 1)
    c1 = pref * spec.A[1] / special.gamma(al) if spec.A[1] else 0.0
    return c0, c1


def _weyl_heat_tail(spec, t, lam):
    # integral of e^{-t x} dN_Weyl(x) from lam to infinity, doubled as a safety margin
    c0, c1 = weyl_constants(spec)
    al = spec.alpha
    tail = c0 * al * t ** (-al) * special.gammaincc(al, t * lam) * special.gamma(al)
    if c1 and al > 1:
        tail += abs(c1) * (al - 1) * t ** (1 - al) * special.gammaincc(al - 1, t * lam) * special.gamma(al - 1)
    return 2.0 * tail


def required_cutoff(spec, t, tol=TRUNCATION_TOL):
    """Smallest cutoff whose heat-trace tail estimate is below tol."""
    lam = max(spec.cutoff, 1.0)
    while _weyl_heat_tail(spec, t, lam) > tol:
        lam *= 1.25
    return lam


def heat_trace_N(spec, t, tol=TRUNCATION_TOL):
    """sum_k d_k exp(-t mu_k), with a certified Weyl-density tail estimate."""
    if t <= 0:
        raise InvalidParameter("t must be positive")
    if _weyl_heat_tail(spec, t, spec.cutoff) > tol:
        need = required_cutoff(spec, t, tol)
        raise TruncationInsufficient(f"cutoff {spec.cutoff:g} too small at t={t:g}; need about {need:.6g}",
                                     required=need)
    return float(np.sum(spec.d * np.exp(-t * spec.mu)))


def extend(spec, cutoff):
    """Same cross-section enumerated up to at least ``cutoff``."""
    if cutoff <= spec.cutoff:
        return spec
    if spec.kind == "sphere":
        n, a = spec.params["n"], spec.params["a"]
        k = int(np.ceil((-(n - 2) + np.sqrt((n - 2) ** 2 + 4 * cutoff * a * a)) / 2.0))
        return sphere_spectrum(n, a, k)
    radii = spec.params["radii"]
    if spec.params.get("exact"):
        radii = [Fraction(r).limit_denominator(10**6) for r in radii]
    return torus_spectrum(radii, cutoff)


def theta(spec, t):
    """Exact heat trace for any t > 0, enlarging the enumeration when needed.

    The torus uses the product of one-dimensional theta functions, with the
    Poisson dual form for small t.
    """
    if spec.kind == "torus":
        out = 1.0
        for r in spec.params["radii"]:
            x = t / r**2
            if x < 1.0:
                m = np.arange(1, 12)
                out *= np.sqrt(np.pi / x) * (1.0 + 2.0 * np.sum(np.exp(-np.pi**2 * m * m / x)))
            else:
                k = np.arange(1, 40)
                out *= 1.0 + 2.0 * np.sum(np.exp(-x * k * k))
        return float(out)
    if spec.kind != "sphere":
        raise UnsupportedCrossSection(spec.kind)
    need = required_cutoff(spec, t, 1e-15)
    return heat_trace_N(extend(spec, need), t, tol=1e-15)


def _torus_theta_excess(spec, t):
    """Theta(t) - vol (4 pi t)^{-alpha} without cancellation, when every circle is in the Poisson regime."""
    xs = [t / r**2 for r in spec.params["radii"]]
    if max(xs) >= 1.0:
        return None
    m = np.arange(1, 12)
    log_corr = sum(np.log1p(2.0 * np.sum(np.exp(-np.pi**2 * m * m / x))) for x in xs)
    return float(spec.A[0] * (4 * np.pi * t) ** (-spec.alpha) * np.expm1(log_corr))


def zeta_N(spec, s):
    """Dirichlet series sum_{k>=1} d_k mu_k^{-s} with a Weyl-density tail."""
    al = spec.alpha
    if s <= al + 0.5:
        raise OutsideConvergence(f"s={s} is not above alpha + 1/2 = {al + 0.5}")
    mu, d = spec.mu[1:], spec.d[1:]
    head = float(np.sum(d * mu ** (-s)))
    c0, c1 = weyl_constants(spec)
    count = float(np.sum(spec.d))
    # effective edge: smooth count equals the enumerated count there
    from scipy.optimize import brentq

    lo, hi = spec.mu[-1], spec.mu[-1] * 4 + 10
    fn = lambda x: c0 * x**al + c1 * x ** (al - 1) - count  # noqa: E731
    lam = brentq(fn, max(lo * 0.5, 1e-9), hi) if fn(max(lo * 0.5, 1e-9)) < 0 < fn(hi) else spec.cutoff
    tail = c0 * al * lam ** (al - s) / (s - al)
    if c1:
        tail += c1 * (al - 1) * lam ** (al - 1 - s) / (s - al + 1)
    return head + tail


def zeta_N_mellin(spec, s, t_split=1.0):
    """Mellin transform of the heat trace with the leading small-t terms subtracted.

    Valid for s > alpha - 2 (three coefficients are subtracted), s != 0.
    """
    al = spec.alpha
    pref = (4 * np.pi) ** (-al)
    A = spec.A
    K = 1 if al < 2 else 2
    t_min = 1e-3

    def remainder(t):
        if spec.kind == "torus":
            excess = _torus_theta_excess(spec, t)
            if excess is not None:
                return excess
        return theta(spec, t) - sum(pref * A[k] * t ** (k - al) for k in range(K + 1))

    small, _ = integrate.quad(lambda t: t ** (s - 1) * remainder(t), t_min, t_split,
                              epsabs=1e-13, epsrel=1e-11, limit=200)
    # below t_min the remainder is the next heat coefficient term
    if K + 1 < len(A):
        p = s + K + 1 - al
        small += pref * A[K + 1] * t_min**p / p
    large, _ = integrate.quad(lambda t: t ** (s - 1) * (theta(spec, t) - 1.0), t_split, np.inf,
                              epsabs=1e-13, epsrel=1e-11, limit=200)
    poles = sum(pref * A[k] / (s + k - al) for k in range(K + 1)) - 1.0 / s
    return float((small + large + poles) / special.gamma(s))


def zeta0_heat(spec):
    """(4 pi)^{-alpha} A_alpha / Gamma(alpha + 1) for odd n, zero for even n."""
    if spec.n % 2 == 0:
        return 0.0
    al = int(round(spec.alpha))
    if al >= len(spec.A):
        raise UnsupportedCrossSection(f"A_{al} is not available for this cross-section")
    return float((4 * np.pi) ** (-al) * spec.A[al] / factorial(al))


def zeta0_and_residues(spec, h=1e-3):
    """Both zeta(0) conventions plus the heat coefficients A_0, A_1, A_2."""
    if spec.kind not in ("sphere", "torus"):
        raise UnsupportedCrossSection(spec.kind)
    heat = zeta0_heat(spec)
    numeric = 0.5 * (zeta_N_mellin(spec, h) + zeta_N_mellin(spec, -h))
    exact = heat - 1.0 if spec.n % 2 == 1 else -1.0
    s_probe = spec.alpha + 1.0
    return ZetaValues(zeta_at={s_probe: zeta_N(extend(spec, 1e4), s_probe)}, zeta0=exact,
                      zeta0_heat=heat, zeta0_numeric=numeric, A_coeffs=list(spec.A))


# -- small-t expansion of the heat trace for spheres S^{2m} (odd n) ---------------------

def _sphere_theta_series(n, a, order=14):
    """Coefficients s_r with Theta(t) ~ e^{c t} sum_r s_r x^{r - alpha}, x = t/a^2, c = ((n-2)/2)^2/a^2.

    The multiplicity is an odd polynomial P in x = k + (n-2)/2 (half-integer
    shifts), so the sum over k is an Euler-Maclaurin sum with offset 1/2.
    """
    if n % 2 == 0:
        raise UnsupportedCrossSection("series available for odd n only")
    m = n - 2
    shift = Fraction(m, 2)
    # P(x) = d_k with k = x - shift, as exact polynomial coefficients (via interpolation)
    deg = n - 2
    xs = [Fraction(j) + shift for j in range(deg + 1)]
    ys = [Fraction(sphere_multiplicity(n, j)) for j in range(deg + 1)]
    P = _interp(xs, ys)
    # Theta e^{-c t} = sum_{k>=0} P(k + 1/2) e^{-x (k+1/2)^2} (terms with k + 1/2 < shift vanish)
    p_odd = {i: P[2 * i + 1] for i in range((len(P)) // 2) if 2 * i + 1 < len(P)}
    alpha = (n - 1) // 2
    coeffs = {}
    for i, pi in p_odd.items():
        # integral part: pi * i!/(2 x^{i+1})
        coeffs[-(i + 1)] = coeffs.get(-(i + 1), 0) + pi * factorial(i) / 2
    for q in range(order):
        B = _bernoulli(2 * q + 2)
        B_half = (Fraction(1, 2 ** (2 * q + 1)) - 1) * B
        for i, pi in p_odd.items():
            r = q - i
            if r < 0:
                continue
            deriv = factorial(2 * q + 1) * pi * Fraction((-1) ** r, factorial(r))
            coeffs[r] = coeffs.get(r, 0) - B_half / factorial(2 * q + 2) * deriv
    # shift power index so that coefficient r multiplies x^{r - alpha}
    return {p + alpha: float(c) for p, c in coeffs.items()}, float(Fraction(m * m, 4))


def _bernoulli(m):
    # exact Bernoulli number B_m (B_1 = -1/2 convention) from the standard recurrence
    B = [Fraction(1)]
    for k in range(1, m + 1):
        B.append(-sum(comb(k + 1, j) * B[j] for j in range(k)) / (k + 1))
    return B[m]


def _interp(xs, ys):
    # exact Lagrange interpolation to monomial coefficients
    deg = len(xs) - 1
    coef = [Fraction(0)] * (deg + 1)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            basis = [Fraction(0)] + basis
            for k in range(len(basis) - 1):
                basis[k] -= xj * basis[k + 1]
            denom *= xi - xj
        for k in range(deg + 1):
            coef[k] += yi * basis[k] / denom
    return coef


def _g_taylor(spec, terms=14):
    """Taylor coefficients of g(t) = t^{alpha} (Theta(t) - 1) for small t (odd n)."""
    al = int(round(spec.alpha))
    if spec.kind == "torus":
        g = [0.0] * terms
        g[0] = (4 * np.pi) ** (-al) * spec.vol_N
    else:
        n, a = spec.params["n"], spec.params["a"]
        s, c = _sphere_theta_series(n, a, order=terms)
        # Theta = e^{c x} sum_r s_r x^{r - alpha}, x = t/a^2; t^alpha Theta = a^{2 alpha} e^{c x} sum s_r x^r
        base = [s.get(r, 0.0) for r in range(terms)]
        expo = [c**q / factorial(q) for q in range(terms)]
        prod = [sum(base[i] * expo[q - i] for i in range(q + 1)) for q in range(terms)]
        g = [a ** (2 * al) * prod[q] * a ** (-2 * q) for q in range(terms)]
    if al < terms:
        g[al] -= 1.0
    return g


def _G(spec, t, g_taylor, t0):
    """G(t) = (-d/dt)^j [t^{j-1} (Theta(t) - 1)] with j = alpha + 1."""
    j = int(round(spec.alpha)) + 1
    m = j - 1
    if t < t0:
        return (-1) ** j * sum(g_taylor[k] * factorial(k) / factorial(k - j) * t ** (k - j)
                               for k in range(j, len(g_taylor)))
    sp = extend(spec, 60.0 / t)
    mu, d = sp.mu[1:], sp.d[1:]
    total = np.zeros_like(mu)
    for i in range(min(j, m) + 1):
        total += comb(j, i) * factorial(m) / factorial(m - i) * t ** (m - i) * (-mu) ** (j - i)
    return float((-1) ** j * np.sum(d * total * np.exp(-mu * t)))


def zeta_prime0(spec, psi_shift=None):
    """zeta_N'(0) for odd n from the integral over the heat trace.

    With F(s) = int t^s (-d/dt)^j [t^{j-1} Theta~] dt and h(s) = Gamma(s-j+1)/(Gamma(s)Gamma(s+1)),
    zeta = h F, hence zeta'(0) = h(0) int (log t + psi(j) + 2 gamma) G dt. ``psi_shift``
    overrides the constant psi(j) + 2 gamma.
    """
    if spec.n % 2 == 0:
        raise UnsupportedCrossSection("zeta'(0) is implemented for odd n only")
    j = int(round(spec.alpha)) + 1
    if psi_shift is None:
        psi_shift = digamma(j).real + 2 * EULER_GAMMA
    h0 = (-1) ** (j - 1) / factorial(j - 1)
    scale = spec.params["a"] ** 2 if spec.kind == "sphere" else min(spec.params["radii"]) ** 2
    t0 = 0.05 * scale
    gt = _g_taylor(spec)
    spec = extend(spec, 60.0 / t0)
    mu1 = spec.mu[1] if len(spec.mu) > 1 else extend(spec, 10.0).mu[1]
    T = 45.0 / mu1
    f = lambda t: (np.log(t) + psi_shift) * _G(spec, t, gt, t0)  # noqa: E731
    val = integrate.quad(f, 0.0, t0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    val += integrate.quad(f, t0, T, epsabs=1e-14, epsrel=1e-12, limit=400, points=[2 * t0, 10 * t0])[0]
    return float(h0 * val)


def zeta_prime0_digamma(spec):
    """Same integral with the constant psi(j) alone."""
    j = int(round(spec.alpha)) + 1
    return zeta_prime0(spec, psi_shift=digamma(j).real)


__all__ = [
    "CrossSpectrum", "ZetaValues", "sphere_spectrum", "torus_spectrum", "heat_trace_N", "zeta_N",
    "zeta_N_mellin", "zeta0_and_residues", "zeta0_heat", "zeta_prime0", "zeta_prime0_digamma",
    "theta", "extend", "required_cutoff", "sphere_volume", "sphere_multiplicity",
]
