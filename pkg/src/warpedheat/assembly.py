"""Heat traces and small-t coefficients on the warped product M = R x_f N.

The Laplacian on M separates over the eigenmodes of N into one-dimensional
operators D_k = -d^2/dy^2 + Q_k with Q_k = alpha^2 omega'^2 - alpha omega'' + mu_k e^{2 omega}.
D_0 is handled in closed form by :mod:`spectral1d`, every other D_k by the
finite-difference oracle.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import factorial

import numpy as np
from scipy import integrate

from .cross_spectrum import (
    CrossSpectrum,
    extend,
    theta,
    zeta0_and_residues,
    zeta0_heat,
    zeta_prime0,
    zeta_prime0_digamma,
)
from .errors import (
    DivergentCoefficient,
    InvalidParameter,
    TruncationInsufficient,
    UnsupportedCrossSection,
)
from .geometry import WarpFunction, volume_beta
from .oracle import Grid1D, discretize, dk_trace_fd, trace_numeric
from .spectral1d import (
    EULER_GAMMA,
    PoschlTellerOp,
    continuum_trace_scaled,
    potential_Qk,
    regularized_trace_D0,
)

TAIL_TOL = 1e-8


def default_workers():
    env = os.environ.get("WARPEDHEAT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ProductModel:
    """Cusp warp on the line times a compact cross-section, truncated to k_max nonzero levels."""

    warp: WarpFunction
    alpha: float
    cross: CrossSpectrum
    k_max: int
    oracle_h: float = 0.002

    def __post_init__(self):
        if self.warp.kind != "cusp":
            raise InvalidParameter("ProductModel needs the cusp warp")
        if abs(self.alpha - self.cross.alpha) > 1e-12:
            raise InvalidParameter(f"alpha={self.alpha} does not match the cross-section's {self.cross.alpha}")
        if abs(self.alpha - self.warp.params["alpha"]) > 1e-12:
            raise InvalidParameter("alpha differs from the warp's alpha")
        if not (0 <= self.k_max <= len(self.cross.mu) - 1):
            raise InvalidParameter(f"k_max must be in 0..{len(self.cross.mu) - 1}")

    @property
    def nu(self):
        return self.warp.params["nu"]

    @property
    def b(self):
        return self.warp.params["b"]

    @property
    def op(self):
        return PoschlTellerOp(self.nu, self.b)


@dataclass
class TraceRecord:
    t: float
    trace_total: float
    trace_D0: float
    per_mode: list = field(default_factory=list)
    tail_bound: float = 0.0

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=False)


# -- truncation tail ---------------------------------------------------------------------

def _mode_tail_bound(model, t, k_max):
    """Upper bound on sum_{k > k_max} d_k Tr exp(-t D_k).

    Golden-Thompson gives Tr exp(-t D_k) <= (4 pi t)^{-1/2} int exp(-t Q_k). With
    Q_k >= -nu/b^2 + mu_k cosh^{2 nu/alpha}(y/b), the y-integral factors as
    exp(-t mu_k) J(mu_k), and J is decreasing in mu_k.
    """
    spec = model.cross
    if k_max + 1 >= len(spec.mu):
        spec = extend(spec, max(2.0 * spec.cutoff, 1.0))
    mu_next = float(spec.mu[k_max + 1])
    nu, b, s = model.nu, model.b, 2.0 * model.nu / model.alpha
    f = lambda y: np.exp(-t * mu_next * np.expm1(min(s * _log_cosh(y / b), 700.0)))  # noqa: E731
    J = 2.0 * integrate.quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
    head = float(np.sum(spec.d[: k_max + 1] * np.exp(-t * spec.mu[: k_max + 1])))
    rest = max(theta(spec, t) - head, 0.0)
    return (4 * np.pi * t) ** -0.5 * np.exp(t * nu / b**2) * J * rest


def _log_cosh(x):
    x = abs(float(x))
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


def required_k_max(model, t, tol=TAIL_TOL, limit=10_000):
    k = 0
    while k < limit:
        if _mode_tail_bound(model, t, k) <= tol:
            return k
        k += 1
    raise TruncationInsufficient(f"no k_max below {limit} meets the tail bound", required=limit)


# -- traces -------------------------------------------------------------------------------

def mode_trace(model, k, t):
    """Lattice trace of exp(-t D_k) for k >= 1."""
    mu_k = float(model.cross.mu[k])
    return dk_trace_fd(lambda y: potential_Qk(model.warp, model.alpha, mu_k, y), t, h=model.oracle_h)


def heat_trace_M_regularized(model, t, workers=None):
    """Regularised heat trace of M: Tr_reg exp(-t D_0) + sum_k d_k Tr exp(-t D_k)."""
    if t <= 0:
        raise InvalidParameter("t must be positive")
    bound = _mode_tail_bound(model, t, model.k_max)
    if bound > TAIL_TOL:
        need = required_k_max(model, t)
        raise TruncationInsufficient(f"k_max={model.k_max} leaves a tail bound {bound:.3g} at t={t:g}; "
                                     f"need k_max >= {need}", required=need)
    d0 = float(regularized_trace_D0(model.op, t))
    ks = list(range(1, model.k_max + 1))
    workers = workers or default_workers()
    if workers > 1 and len(ks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(lambda k: mode_trace(model, k, t), ks))
    else:
        traces = [mode_trace(model, k, t) for k in ks]
    per_mode = [{"k": k, "mu_k": float(model.cross.mu[k]), "d_k": int(model.cross.d[k]), "trace": tr}
                for k, tr in zip(ks, traces)]
    total = d0
    for row in per_mode:
        total += row["d_k"] * row["trace"]
    return TraceRecord(t=float(t), trace_total=float(total), trace_D0=d0, per_mode=per_mode, tail_bound=bound)


def lattice_product_trace(model, t, n_theta=64, h=0.02, L0=None, level=60.0):
    """Regularised trace of the lattice operator D_0 - e^{2 omega} Delta_N on (y grid) x (periodic torus grid).

    The torus directions use the periodic second-difference Laplacian with
    n_theta points per circle. The operator block-diagonalises under the
    discrete Fourier transform, so each block is a tridiagonal matrix in y. The
    zero block keeps a wide box and subtracts the same-grid free trace; every
    other block is confining and is cut where t Q >= level.
    """
    if model.cross.kind != "torus":
        raise UnsupportedCrossSection("the lattice product check needs a torus cross-section")
    nu, b = model.nu, model.b
    m = np.arange(n_theta)
    lam1 = [4.0 / (2 * np.pi * r / n_theta) ** 2 * np.sin(np.pi * m / n_theta) ** 2
            for r in model.cross.params["radii"]]
    mus = np.sum([g.ravel() for g in np.meshgrid(*lam1, indexing="ij")], axis=0)
    vals, counts = np.unique(np.round(mus[mus * t < level], 10), return_counts=True)
    q0 = lambda y: potential_Qk(model.warp, model.alpha, 0.0, y)  # noqa: E731
    grid0 = Grid1D.with_spacing(40.0 * b if L0 is None else L0, h)
    total = trace_numeric(discretize(q0, grid0), t, "regularized", q_inf=nu**2 / b**2)
    for mu, c in zip(vals, counts):
        if mu == 0.0:
            continue
        Q = lambda y, mu=mu: potential_Qk(model.warp, model.alpha, mu, y)  # noqa: E731
        L = b
        while t * float(Q(np.array([L]))[0]) < level:
            L += 0.25 * b
        total += c * trace_numeric(discretize(Q, Grid1D.with_spacing(L, h)), t, "full")
    return float(total)


# -- small-t coefficients -------------------------------------------------------------------

@dataclass(frozen=True)
class Asymptotics:
    S1: float
    S2: float
    zeta0: float
    zeta_prime0: float
    variant: str


def trace_asymptotics_S1_S2(model, corrected=False, zeta0=None, zeta_prime0_value=None):
    """Coefficients S1 of t^{-1/2} log t and S2 of t^{-1/2} in the small-t sum over k >= 1.

    corrected=False evaluates S1 = -b (4 pi)^{-1/2} (alpha/nu) z0 and
    S2 = b (4 pi)^{-1/2} [(alpha/nu) z0' + ((alpha/nu) gamma + 2) z0] with z0 from
    the heat-coefficient formula and z0' with the constant psi(j).
    corrected=True uses z0 including the -1 of the kernel mode, z0' with psi(j) + 2 gamma,
    and the bracket (2 log 2 - (alpha/nu) gamma) z0 that follows from the exact
    large-y integral of exp(-t mu e^{2 omega}).
    Explicit zeta0 / zeta_prime0_value override the cross-section computations.
    """
    return _asymptotics(model, corrected, zeta0, zeta_prime0_value)[:2]


def _asymptotics(model, corrected, zeta0, zp0):
    spec = model.cross
    if spec.kind not in ("sphere", "torus"):
        raise UnsupportedCrossSection(spec.kind)
    if zeta0 is None:
        zeta0 = zeta0_and_residues(spec).zeta0 if corrected else zeta0_heat(spec)
    if zp0 is None:
        zp0 = zeta_prime0(spec) if corrected else zeta_prime0_digamma(spec)
    r = model.alpha / model.nu
    pre = model.b * (4 * np.pi) ** -0.5
    S1 = -pre * r * zeta0
    if corrected:
        S2 = pre * (r * zp0 + (2.0 * np.log(2.0) - r * EULER_GAMMA) * zeta0)
    else:
        S2 = pre * (r * zp0 + (r * EULER_GAMMA + 2.0) * zeta0)
    return float(S1), float(S2), float(zeta0), float(zp0)


def asymptotics_report(model):
    """Both variants side by side, with both zeta(0) conventions."""
    z = zeta0_and_residues(model.cross)
    out = {"zeta0_heat_coefficient": z.zeta0_heat, "zeta0_exact": z.zeta0,
           "zeta0_numeric": z.zeta0_numeric}
    for name, corr in (("uncorrected", False), ("corrected", True)):
        S1, S2, z0, zp = _asymptotics(model, corr, None, None)
        out[name] = asdict(Asymptotics(S1, S2, z0, zp, name))
    return out


def heat_coeff_A01_M(model):
    """A_0(M) = vol(M) and A_1(M) = (1/6) int_M R, separated over the warp integrals."""
    w, al = model.warp, model.alpha
    kw = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    edge = 40.0 * model.b

    def line(f):
        core = integrate.quad(f, -edge, edge, **kw)[0]
        tails = integrate.quad(f, edge, np.inf, **kw)[0] + integrate.quad(f, -np.inf, -edge, **kw)[0]
        return core + tails

    C00 = volume_beta(w, al)
    C12 = line(lambda y: np.exp(-2 * al * w.omega(y)) * (al / 3.0)
               * (2 * w.omega2(y) - (2 * al + 1) * w.omega1(y) ** 2))
    if not ((al - 1.0) * w.asymptotic_slope > 0):
        raise DivergentCoefficient(f"C_(1,0) = (1/6) int exp(-2(alpha-1) omega) diverges for alpha={al}")
    C10 = line(lambda y: np.exp(-2 * (al - 1) * w.omega(y)) / 6.0)
    int_F = 6.0 * model.cross.A[1]
    A0 = C00 * model.cross.vol_N
    A1 = C12 * model.cross.vol_N + C10 * int_F
    return float(A0), float(A1)


# -- small-t identity for D_0 ---------------------------------------------------------------------

def P_closed(k, nu):
    if k == 1:
        return 2.0 * nu * (nu + 1.0)
    if k == 2:
        return 4.0 / 3.0 * nu**2 * (nu + 1.0) ** 2
    raise InvalidParameter("closed forms exist for k = 1, 2")


@dataclass
class IdentityReport:
    nu: float
    b: float
    k_trunc: int
    rows: list
    exponent: float
    expected_exponent: float
    constant: float
    status: str


def identity_lhs(nu, tau):
    """sum_j e^{(nu-j)^2 tau} + int dp/(2 pi) e^{-p^2 tau} int d eta (W - 2), including the R(0)/2 term."""
    op = PoschlTellerOp(nu, 1.0)
    js = np.arange(op.n_bound)
    return float(np.sum(np.exp((nu - js) ** 2 * tau))) + continuum_trace_scaled(nu, tau)


def identity_rhs(nu, tau, k_trunc):
    return (4 * np.pi) ** -0.5 * sum(tau ** (k - 0.5) / factorial(k) * P_closed(k, nu)
                                     for k in range(1, k_trunc + 1))


def verify_trace_identity(nu, b, t_grid, k_trunc=2, slack=0.3):
    """Fit |LHS - RHS| ~ C t^p over t_grid; PASS when p is within ``slack`` of k_trunc + 1/2.

    t is the scaled time t/b^2, so both sides are independent of b.
    """
    if k_trunc not in (1, 2):
        raise InvalidParameter("k_trunc must be 1 or 2")
    t_grid = [float(t) for t in t_grid]
    if len(t_grid) < 2 or any(t <= 0 or t > 0.5 for t in t_grid):
        raise InvalidParameter("need at least two t values in (0, 0.5]")
    rows = []
    for t in t_grid:
        lhs, rhs = identity_lhs(nu, t), identity_rhs(nu, t, k_trunc)
        rows.append({"t": t, "lhs": lhs, "rhs": rhs, "diff": abs(lhs - rhs)})
    x = np.log([r["t"] for r in rows])
    yv = np.log([max(r["diff"], 1e-300) for r in rows])
    slope, icpt = np.polyfit(x, yv, 1)
    expected = k_trunc + 0.5
    ok = bool(np.all(np.isfinite(yv)) and abs(slope - expected) <= slack)
    return IdentityReport(nu=float(nu), b=float(b), k_trunc=k_trunc, rows=rows, exponent=float(slope),
                          expected_exponent=expected, constant=float(np.exp(icpt)),
                          status="PASS" if ok else "FAIL")


__all__ = [
    "ProductModel", "TraceRecord", "heat_trace_M_regularized", "mode_trace", "required_k_max",
    "lattice_product_trace", "trace_asymptotics_S1_S2", "asymptotics_report", "heat_coeff_A01_M",
    "verify_trace_identity", "identity_lhs", "identity_rhs", "P_closed", "IdentityReport", "Asymptotics",
]
