"""Warp profiles, curvature, volume and geodesics of warped products dy^2 + e^{-2 omega} dl_N^2."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import DivergentVolume, InvalidParameter, TurningPoint
from .specfun import loggamma


def log_cosh(x):
    """log cosh(x) without overflow."""
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


@dataclass(frozen=True)
class WarpFunction:
    """Profile omega(y) with derivatives; f = exp(-omega) is the warping function."""

    omega: Callable
    omega1: Callable
    omega2: Callable
    asymptotic_slope: float
    kind: str
    params: dict = field(default_factory=dict)

    def __call__(self, y):
        return self.omega(y)


def _sech2(x):
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def make_cusp_warp(nu, alpha, b):
    """omega = (nu/alpha) log cosh(y/b): a cusp at both ends of the line."""
    if not (nu > 0 and alpha > 0 and b > 0):
        raise InvalidParameter("nu, alpha and b must be positive")
    s = nu / alpha
    return WarpFunction(
        omega=lambda y: s * log_cosh(np.asarray(y, dtype=float) / b),
        omega1=lambda y: s / b * np.tanh(np.asarray(y, dtype=float) / b),
        omega2=lambda y: s / b**2 * _sech2(np.asarray(y, dtype=float) / b),
        asymptotic_slope=s / b,
        kind="cusp",
        params={"nu": nu, "alpha": alpha, "b": b},
    )


def make_linear_warp(a):
    """omega = y/a (hyperbolic cusp, constant negative curvature)."""
    if a <= 0:
        raise InvalidParameter("a must be positive")
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))  # noqa: E731
    return WarpFunction(
        omega=lambda y: np.asarray(y, dtype=float) / a,
        omega1=lambda y: zero(y) + 1.0 / a,
        omega2=zero,
        asymptotic_slope=1.0 / a,
        kind="linear",
        params={"a": a},
    )


def make_quadratic_warp(b):
    """omega = (y/b)^2; confining, with harmonic-oscillator ground states."""
    if b <= 0:
        raise InvalidParameter("b must be positive")
    return WarpFunction(
        omega=lambda y: (np.asarray(y, dtype=float) / b) ** 2,
        omega1=lambda y: 2.0 * np.asarray(y, dtype=float) / b**2,
        omega2=lambda y: np.zeros_like(np.asarray(y, dtype=float)) + 2.0 / b**2,
        asymptotic_slope=np.inf,
        kind="quadratic",
        params={"b": b},
    )


def make_custom_warp(omega, asymptotic_slope):
    """Warp from omega alone; derivatives by fourth-order central differences."""

    def step(y):
        return 1e-4 * np.maximum(1.0, np.abs(y))

    def d1(y):
        y = np.asarray(y, dtype=float)
        h = step(y)
        return (-omega(y + 2 * h) + 8 * omega(y + h) - 8 * omega(y - h) + omega(y - 2 * h)) / (12 * h)

    def d2(y):
        y = np.asarray(y, dtype=float)
        h = step(y)
        return (-omega(y + 2 * h) + 16 * omega(y + h) - 30 * omega(y)
                + 16 * omega(y - h) - omega(y - 2 * h)) / (12 * h * h)

    return WarpFunction(omega=omega, omega1=d1, omega2=d2,
                        asymptotic_slope=float(asymptotic_slope), kind="custom")


@dataclass(frozen=True)
class CurvatureReport:
    r_0k0i_factor: float
    r_ijkm_warp_term: float
    conformal_factor: float
    ricci_00: float
    scalar_R_warp_part: float


def curvature_at(warp, y, alpha=None):
    """Warp-dependent curvature components at y.

    alpha = (n - 1)/2 defaults to the cusp's own alpha, else 1/2.
    """
    if alpha is None:
        alpha = warp.params.get("alpha", 0.5)
    w1 = float(warp.omega1(y))
    w2 = float(warp.omega2(y))
    return CurvatureReport(
        r_0k0i_factor=w1 * w1 - w2,
        r_ijkm_warp_term=-w1 * w1,
        conformal_factor=float(np.exp(2.0 * warp.omega(y))),
        ricci_00=-2.0 * alpha * (w1 * w1 - w2),
        scalar_R_warp_part=4.0 * alpha * w2 - 2.0 * alpha * (2.0 * alpha + 1.0) * w1 * w1,
    )


def volume_beta_closed_form(nu, b):
    """Integral of sech^{2 nu}(y/b) over the line."""
    return float(np.sqrt(np.pi) * np.exp((loggamma(nu) - loggamma(nu + 0.5)).real) * b)


def volume_beta(warp, alpha):
    """Integral of exp(-2 alpha omega(y)) over the line."""
    if not (2.0 * alpha * warp.asymptotic_slope > 0):
        raise DivergentVolume("exp(-2 alpha omega) is not integrable: need alpha * slope > 0")

    # both ends must decay: omega -> +infinity on each side
    reach = max(30.0 / (alpha * warp.asymptotic_slope), 10.0)
    if min(float(warp.omega(-reach)), float(warp.omega(reach))) * 2.0 * alpha < 30.0:
        raise DivergentVolume("exp(-2 alpha omega) does not decay at both ends of the line")

    def f(y):
        return float(np.exp(-2.0 * alpha * warp.omega(y)))

    if warp.kind == "cusp":
        # finite core at the bump's natural scale plus exponentially small tails
        edge = 40.0 * warp.params["b"]
        core = integrate.quad(f, -edge, edge, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        tail = integrate.quad(f, edge, np.inf, epsabs=1e-16, epsrel=1e-12, limit=200)[0]
        return core + 2.0 * tail
    left = integrate.quad(f, -np.inf, 0.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    right = integrate.quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return left + right


def geodesic_distance_cusp(y, yp, sigma_hat, a):
    """Exact geodesic distance for omega = y/a (hyperbolic cusp)."""
    if a <= 0 or sigma_hat < 0:
        raise InvalidParameter("need a > 0 and sigma_hat >= 0")
    # symmetric in (y, yp) by construction
    arg = np.cosh((y - yp) / a) + np.exp(-(y + yp) / a) * sigma_hat / a**2
    return float(a * np.arccosh(arg))


def _arc_length(warp, c1, y0, y1):
    if y0 == y1:
        return 0.0
    val, _ = integrate.quad(
        lambda u: 1.0 / np.sqrt(max(1.0 - c1 * c1 * np.exp(2.0 * warp.omega(u)), 1e-300)),
        min(y0, y1), max(y0, y1), epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def _arc_length_to_turn(warp, c1, y0, y_turn):
    # 1/sqrt(g) has an inverse square-root singularity at the turning point;
    # factor it out with an algebraic weight. There c1^2 e^{2 omega} = 1.
    w_t = float(warp.omega(y_turn))
    w1 = float(warp.omega1(y_turn))
    w2 = float(warp.omega2(y_turn))

    def smooth(u):
        v = u - y_turn
        if v == 0.0:
            return 1.0 / np.sqrt(2.0 * abs(w1))
        if abs(v) < 1e-4:
            # Taylor form avoids the cancellation in 1 - c1^2 e^{2 omega}
            return np.sqrt(abs(v) / abs(2.0 * w1 * v + (w2 + 2.0 * w1 * w1) * v * v))
        return np.sqrt(abs(v) / -np.expm1(2.0 * (float(warp.omega(u)) - w_t)))

    lo, hi = min(y0, y_turn), max(y0, y_turn)
    if hi - lo < 1e-8:
        return 2.0 * np.sqrt((hi - lo) / (2.0 * abs(w1)))
    wvar = (0.0, -0.5) if y_turn > y0 else (-0.5, 0.0)
    val, _ = integrate.quad(smooth, lo, hi, weight="alg", wvar=wvar, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def geodesic_y_of_s(warp, y0, c1, s, direction=1):
    """y(s) along a geodesic with first integral ydot^2 + c1^2 e^{2 omega} = 1.

    direction = +1 follows increasing y, -1 decreasing y. Raises TurningPoint
    when ydot vanishes before arc length s is reached.
    """
    g0 = 1.0 - c1 * c1 * np.exp(2.0 * float(warp.omega(y0)))
    if g0 <= 0:
        raise InvalidParameter("1 - c1^2 exp(2 omega(y0)) must be positive")
    if s < 0:
        raise InvalidParameter("s must be nonnegative")
    if s == 0:
        return float(y0)
    if c1 == 0:
        return float(y0 + direction * s)
    d = 1 if direction >= 0 else -1

    def g(u):
        return 1.0 - c1 * c1 * np.exp(2.0 * float(warp.omega(u)))

    # bracket: step outwards until s is exceeded or g changes sign
    step = max(s, 1e-3)
    lo, hi = float(y0), float(y0) + d * step
    turning = None
    for _ in range(200):
        if g(hi) <= 0:
            turning = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)
            break
        if _arc_length(warp, c1, y0, hi) >= s:
            break
        lo, hi = hi, hi + d * step
        step *= 2.0
    if turning is not None:
        s_turn = _arc_length_to_turn(warp, c1, y0, turning)
        if s_turn < s:
            raise TurningPoint(turning, s_turn)
        hi = turning

        def arc(u):
            return s_turn - _arc_length_to_turn(warp, c1, u, turning) if u != turning else s_turn
    else:
        def arc(u):
            return _arc_length(warp, c1, y0, u)
    root = optimize.brentq(lambda u: arc(u) - s, min(lo, hi), max(lo, hi),
                           xtol=1e-14, rtol=1e-15, maxiter=200)
    return float(root)


def geodesic_y_closed_form_linear(a, yp, c1, s):
    """Closed form for omega = y/a on the branch moving towards decreasing y:

    y(s) = -a log{c1 cosh[s/a + arccosh(e^{-yp/a}/c1)]}.
    """
    return float(-a * np.log(c1 * np.cosh(s / a + np.arccosh(np.exp(-yp / a) / c1))))
