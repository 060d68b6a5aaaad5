"""Differential polynomials in a potential Q and the heat-kernel diagonal coefficients.

A monomial Q^(m1) Q^(m2) ... Q^(mj) is keyed by the tuple (m1, ..., mj) sorted in
descending order; the empty tuple is the constant 1. Coefficients are exact
``fractions.Fraction`` values.
"""
from __future__ import annotations

import threading
from collections import defaultdict
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .errors import InsufficientDerivatives, InvalidParameter, NotExactDerivative


def _key(orders):
    return tuple(sorted(orders, reverse=True))


class DiffPoly:
    """Immutable differential polynomial with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for k, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                clean[_key(k)] = clean.get(_key(k), Fraction(0)) + c
        self.terms = {k: c for k, c in clean.items() if c != 0}

    @classmethod
    def const(cls, c):
        return cls({(): c})

    @classmethod
    def Q(cls, m=0):
        """The single monomial Q^(m)."""
        return cls({(m,): 1})

    def __add__(self, other):
        other = _lift(other)
        out = defaultdict(Fraction, self.terms)
        for k, c in other.terms.items():
            out[k] += c
        return DiffPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return DiffPoly({k: c * other for k, c in self.terms.items()})
        other = _lift(other)
        out = defaultdict(Fraction)
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                out[_key(k1 + k2)] += c1 * c2
        return DiffPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = DiffPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.const(other)
        return isinstance(other, DiffPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"DiffPoly({to_text(self)})"

    def coefficient(self, *orders):
        return self.terms.get(_key(orders), Fraction(0))

    def max_order(self):
        return max((k[0] for k in self.terms if k), default=-1)

    def derivative(self):
        """Total derivative d/dy by the Leibniz rule."""
        out = defaultdict(Fraction)
        for k, c in self.terms.items():
            for i in range(len(k)):
                new = list(k)
                new[i] += 1
                out[_key(new)] += c
        return DiffPoly(out)


def _lift(x):
    return x if isinstance(x, DiffPoly) else DiffPoly.const(x)


def ordered_terms(p):
    """Terms sorted by degree (descending), then by derivative orders."""
    return sorted(p.terms.items(), key=lambda kv: (-len(kv[0]), tuple(-m for m in kv[0])))


def degree_weight(key):
    """Dimension of a monomial: 2 per factor of Q plus one per derivative."""
    return 2 * len(key) + sum(key)


def apply_E(p):
    """E p = p''' - 2 Q p' - 2 (Q p)'."""
    d1 = p.derivative()
    q = DiffPoly.Q(0)
    return d1.derivative().derivative() - 2 * (q * d1) - 2 * (q * p).derivative()


def antiderivative(p):
    """Return q without constant term such that dq/dy = p.

    Works by repeated integration by parts: the monomial whose highest
    derivative order m is largest must come from differentiating
    B (Q^(m-1))^(r+1)/(r+1), where Q^(m) appears linearly and B involves lower
    orders only. That candidate is subtracted and the process repeats.
    """
    rest = DiffPoly(p.terms)
    result = DiffPoly()
    for _ in range(100_000):
        if not rest:
            return result
        if () in rest.terms:
            raise NotExactDerivative("a constant term is not a total derivative")
        m = rest.max_order()
        key, coef = max(((k, c) for k, c in rest.terms.items() if k[0] == m),
                        key=lambda kc: (kc[0].count(m - 1) if m else 0, kc[0]))
        if m == 0 or key.count(m) > 1:
            raise NotExactDerivative(f"monomial {_mono_text(key)} has no local antiderivative")
        lower = list(key[1:])
        r = lower.count(m - 1)
        base = [o for o in lower if o != m - 1]
        piece = DiffPoly({tuple(base + [m - 1] * (r + 1)): coef / (r + 1)})
        result = result + piece
        rest = rest - piece.derivative()
    raise NotExactDerivative("integration by parts did not terminate")


_cache = {0: DiffPoly.const(1)}
_cache_lock = threading.Lock()


def heat_coefficient(k):
    """Diagonal heat-kernel coefficient c_k as a differential polynomial in Q."""
    if k < 0:
        raise InvalidParameter("k must be nonnegative")
    c = _cache.get(k)
    if c is not None:
        return c
    with _cache_lock:
        for j in range(max(_cache) + 1, k + 1):
            prev = _cache[j - 1]
            _cache[j] = antiderivative(apply_E(prev)) * Fraction(j, 2 * (2 * j - 1))
    return _cache[k]


def restructured_coefficient(k):
    """c~_k = sum_j C(k, j) Q^j c_{k-j}."""
    if k < 0:
        raise InvalidParameter("k must be nonnegative")
    q = DiffPoly.Q(0)
    out = DiffPoly()
    for j in range(k + 1):
        out = out + comb(k, j) * (q ** j) * heat_coefficient(k - j)
    return out


def linear_coefficient(k):
    """Predicted coefficient of Q^(2k-2) in c_k: -k!(k-1)!/(2k-1)!."""
    return -Fraction(factorial(k) * factorial(k - 1), factorial(2 * k - 1))


def evaluate(p, q_derivs):
    """Evaluate p given q_derivs = [Q, Q', Q'', ...] (scalars or arrays)."""
    need = p.max_order()
    if need >= len(q_derivs):
        raise InsufficientDerivatives(f"need derivatives up to order {need}, got {len(q_derivs) - 1}")
    vals = [np.asarray(v, dtype=float) for v in q_derivs]
    total = 0.0
    for key, c in ordered_terms(p):
        term = float(c)
        for m in key:
            term = term * vals[m]
        total = total + term
    return total


def _mono_text(key):
    if not key:
        return "1"
    parts = []
    for m in sorted(set(key), reverse=True):
        r = key.count(m)
        name = "Q" + ("'" * m if m <= 4 else f"^({m})")
        parts.append(name if r == 1 else (f"({name})^{r}" if m else f"Q^{r}"))
    return " ".join(parts)


def to_text(p, name=None):
    """Stable text form, e.g. ``c2 = +1 Q^2 -1/3 Q''``."""
    body = " ".join(
        f"{'+' if c > 0 else '-'}{abs(c)}" + ("" if not k else " " + _mono_text(k))
        for k, c in ordered_terms(p)
    ) or "0"
    return f"{name} = {body}" if name else body


def _tanh_poly_derivative(coeffs):
    # d/dy of sum a_i T^i with T = tanh(y): T' = 1 - T^2
    out = np.zeros(len(coeffs) + 1)
    for i, a in enumerate(coeffs):
        if i:
            out[i - 1] += i * a
            out[i + 1] -= i * a
    return out


def cusp_potential_derivatives(nu, count):
    """Coefficient vectors (in powers of T = tanh eta) of u, u', ... for b = 1.

    u = -nu(nu+1) sech^2 = -nu(nu+1)(1 - T^2).
    """
    g = nu * (nu + 1.0)
    polys = [np.array([-g, 0.0, g])]
    for _ in range(count - 1):
        polys.append(_tanh_poly_derivative(polys[-1]))
    return polys


def global_Ck_cusp(k, nu, b, nodes=200):
    """C_k = integral over the line of c_k evaluated on u = -nu(nu+1)/(b^2 cosh^2(y/b)).

    With T = tanh(y/b) every u^(m) is b^{-2-m} times a polynomial in T divisible
    by 1 - T^2, and dy = b dT/(1 - T^2), so the integral becomes a polynomial
    integral over T in (-1, 1), done with Gauss-Legendre quadrature (exact for
    enough nodes).
    """
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    if nu <= 0 or b <= 0:
        raise InvalidParameter("nu and b must be positive")
    ck = heat_coefficient(k)
    count = max(ck.max_order() + 1, 1)
    polys = cusp_potential_derivatives(nu, count)
    T, w = np.polynomial.legendre.leggauss(max(nodes, 2 * k + 2))
    vals = [np.polynomial.polynomial.polyval(T, c) for c in polys]
    integrand = evaluate(ck, vals) / (1.0 - T * T)
    # unit b; dimension 2k - 1 restores b
    return float(np.sum(w * integrand)) * b ** (1 - 2 * k)
