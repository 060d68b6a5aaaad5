"""Command-line front end: ``warpedheat <command> [options]``.

Every command emits a table as CSV (header row, LF endings, 17 significant
digits) or as one JSON object ``{"config": ..., "rows" | "report": ...}``.
Options may also come from a ``key = value`` file passed with ``--config``;
explicit flags take precedence. Exit codes: 0 success, 2 invalid input,
3 a numerical check failed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import assembly, cross_spectrum, diffpoly, geometry, oracle, spectral1d
from .errors import DivergentCoefficient, WarpedHeatError

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RangeSpec:
    """start:stop:count[:log], or an explicit comma-separated list."""

    start: float
    stop: float
    count: int
    scale: str = "linear"
    values: tuple = ()

    @classmethod
    def parse(cls, text):
        text = str(text).strip()
        if not text:
            raise ConfigError("empty range")
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4):
                raise ConfigError(f"range {text!r} must be start:stop:count[:linear|log]")
            scale = parts[3] if len(parts) == 4 else "linear"
            if scale not in ("linear", "log"):
                raise ConfigError(f"unknown range scale {scale!r}")
            try:
                start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            except ValueError as exc:
                raise ConfigError(f"bad range {text!r}") from exc
            if count < 1:
                raise ConfigError(f"range {text!r} is empty")
            if scale == "log" and (start <= 0 or stop <= 0):
                raise ConfigError("log ranges need positive end points")
            return cls(start, stop, count, scale)
        try:
            vals = tuple(float(v) for v in text.split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value list {text!r}") from exc
        if not vals:
            raise ConfigError("empty value list")
        return cls(vals[0], vals[-1], len(vals), "list", vals)

    def array(self):
        if self.scale == "list":
            return np.array(self.values)
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self):
        if self.scale == "list":
            return ",".join(repr(v) for v in self.values)
        return f"{self.start!r}:{self.stop!r}:{self.count}:{self.scale}"


@dataclass
class RunConfig:
    command: str
    nu: float = 1.5
    b: float = 1.0
    alpha: float | None = None
    op: str = "d0"
    cross: str | None = None
    n: int = 3
    a: float = 1.0
    radii: str = "1,1"
    kmax: int = 10
    cutoff: float | None = None
    t_grid: RangeSpec | None = None
    p_grid: RangeSpec | None = None
    y_grid: RangeSpec | None = None
    yp_grid: RangeSpec | None = None
    output: str | None = None
    format: str = "csv"
    oracle_L: float = 12.0
    oracle_h: float = 0.01
    oracle_steps: int = 40
    tolerance: float = 1e-5
    asymptotics: bool = False
    restructured: bool = False
    checks: str = "all"
    threads: int | None = None

    def echo(self):
        out = {}
        for k, v in asdict(self).items():
            val = getattr(self, k)
            out[k] = str(val) if isinstance(val, RangeSpec) else v
        return out


RANGE_KEYS = ("t_grid", "p_grid", "y_grid", "yp_grid")
FLOAT_KEYS = ("nu", "b", "alpha", "a", "cutoff", "oracle_L", "oracle_h", "tolerance")
INT_KEYS = ("n", "kmax", "oracle_steps", "threads")
BOOL_KEYS = ("asymptotics", "restructured")

DEFAULT_GRIDS = {
    "t_grid": "0.1:1:4",
    "p_grid": "0.01:20:25:log",
    "y_grid": "-1:1:3",
}


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in RANGE_KEYS:
            return value if isinstance(value, RangeSpec) else RangeSpec.parse(value)
        if key in FLOAT_KEYS:
            return float(value)
        if key in INT_KEYS:
            return int(value)
        if key in BOOL_KEYS:
            if isinstance(value, bool):
                return value
            return str(value).strip().lower() in ("1", "true", "yes", "on")
    except ConfigError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def read_config_file(path):
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in parser["run"].items()}


def build_config(ns):
    values = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for k, v in vars(ns).items():
        if k in ("config", "command") or v is None:
            continue
        values[k] = v
    known = set(RunConfig.__dataclass_fields__) - {"command"}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown option(s): {', '.join(unknown)}")
    cfg = RunConfig(command=ns.command, **{k: _coerce(k, v) for k, v in values.items()})
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.nu <= 0 or cfg.b <= 0:
        raise ConfigError("nu and b must be positive")
    if cfg.alpha is not None and cfg.alpha <= 0:
        raise ConfigError("alpha must be positive")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg.cross not in (None, "sphere", "torus"):
        raise ConfigError("cross must be sphere or torus")
    if cfg.kmax < 0:
        raise ConfigError("kmax must be nonnegative")
    if cfg.oracle_h <= 0 or cfg.oracle_L <= 0 or cfg.oracle_steps < 10:
        raise ConfigError("oracle grid overrides must be positive (steps >= 10)")
    for key in RANGE_KEYS:
        if getattr(cfg, key) is None and key in DEFAULT_GRIDS:
            setattr(cfg, key, RangeSpec.parse(DEFAULT_GRIDS[key]))
    if cfg.t_grid is not None and np.any(cfg.t_grid.array() <= 0):
        raise ConfigError("t values must be positive")
    if cfg.p_grid is not None and np.any(cfg.p_grid.array() <= 0):
        raise ConfigError("p values must be positive")
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("threads must be >= 1")


def pool_size(cfg):
    if cfg.threads:
        return cfg.threads
    env = os.environ.get("WARPEDHEAT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError("WARPEDHEAT_THREADS must be an integer") from exc
    return os.cpu_count() or 1


def fan_out(cfg, fn, items):
    """Map fn over items on a worker pool; results come back in input order."""
    items = list(items)
    workers = min(pool_size(cfg), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- output ---------------------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def to_csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


@dataclass
class Result:
    columns: list
    rows: list
    report: dict | None = None
    failed: bool = False
    summary: str = ""

    def render(self, cfg):
        if cfg.format == "json":
            body = {"config": cfg.echo()}
            if self.report is not None:
                body["report"] = self.report
            else:
                body["rows"] = self.rows
            return json.dumps(_jsonable(body), indent=2) + "\n"
        return to_csv(self.columns, self.rows)


# -- commands -------------------------------------------------------------------------------------

def _cross(cfg):
    if cfg.cross == "sphere":
        return cross_spectrum.sphere_spectrum(cfg.n, cfg.a, cfg.kmax)
    radii = [Fraction(r.strip()) for r in str(cfg.radii).split(",") if r.strip()]
    if not radii:
        raise ConfigError("radii list is empty")
    radii = [int(r) if r.denominator == 1 else r for r in radii]
    cutoff = cfg.cutoff if cfg.cutoff is not None else float(cfg.kmax)
    spec = cross_spectrum.torus_spectrum(radii, max(cutoff, 1e-9))
    return spec


def cmd_spectrum(cfg):
    if cfg.cross:
        spec = _cross(cfg)
        rows = [{"k": k, "mu": float(m), "d": int(d)} for k, (m, d) in enumerate(spec.levels)]
        return Result(["k", "mu", "d"], rows)
    if cfg.op != "d0":
        raise ConfigError("spectrum needs --op d0 or --cross sphere|torus")
    dec = spectral1d.discrete_spectrum(spectral1d.PoschlTellerOp(cfg.nu, cfg.b))
    rows = [{"j": j, "lambda": lam, "normalization": c} for j, lam, c in dec.discrete]
    return Result(["j", "lambda", "normalization"], rows,
                  summary=f"continuum threshold {dec.continuum_threshold:.17g}")


def cmd_scattering(cfg):
    op = spectral1d.PoschlTellerOp(cfg.nu, cfg.b)
    rows = []
    for p in cfg.p_grid.array():
        T = complex(spectral1d.transmission(op, 1j * p))
        R = complex(spectral1d.reflection(op, 1j * p))
        rows.append({"p": float(p), "re_T": T.real, "im_T": T.imag, "re_R": R.real, "im_R": R.imag,
                     "defect": abs(abs(T) ** 2 + abs(R) ** 2 - 1.0)})
    worst = max(r["defect"] for r in rows)
    return Result(["p", "re_T", "im_T", "re_R", "im_R", "defect"], rows, failed=worst >= 1e-10,
                  summary=f"max unitarity defect {worst:.3g}")


def cmd_heat(cfg):
    op = spectral1d.PoschlTellerOp(cfg.nu, cfg.b)
    ys = cfg.y_grid.array()
    yps = cfg.yp_grid.array() if cfg.yp_grid is not None else ys
    jobs = [(float(t), float(y), float(yp)) for t in cfg.t_grid.array() for y in ys for yp in yps]
    Q = lambda y: spectral1d.potential_Q0(op, y)  # noqa: E731

    def one(job):
        t, y, yp = job
        exact = spectral1d.heat_kernel_U0(op, t, y, yp)
        fd = oracle.heat_kernel_fd(Q, t, y, yp, L=cfg.oracle_L, h=cfg.oracle_h, min_steps=cfg.oracle_steps)
        return {"t": t, "y": y, "yp": yp, "analytic": exact, "oracle": fd, "abs_diff": abs(exact - fd)}

    rows = fan_out(cfg, one, jobs)
    worst = max(r["abs_diff"] for r in rows)
    return Result(["t", "y", "yp", "analytic", "oracle", "abs_diff"], rows, failed=worst > cfg.tolerance,
                  summary=f"max |analytic - oracle| {worst:.3g} (tolerance {cfg.tolerance:g})")


def _model(cfg):
    spec = _cross(cfg)
    alpha = spec.alpha if cfg.alpha is None else cfg.alpha
    warp = geometry.make_cusp_warp(cfg.nu, alpha, cfg.b)
    return assembly.ProductModel(warp, alpha, spec, min(cfg.kmax, len(spec.mu) - 1))


def cmd_trace(cfg):
    op = spectral1d.PoschlTellerOp(cfg.nu, cfg.b)
    ts = [float(t) for t in cfg.t_grid.array()]
    if not cfg.cross:
        rows = [{"t": t, "trace_total": v, "trace_D0": v, "per_mode": []}
                for t, v in zip(ts, fan_out(cfg, lambda t: spectral1d.regularized_trace_D0(op, t), ts))]
        return Result(["t", "trace_total", "trace_D0"], rows)
    model = _model(cfg)
    # modes run in parallel inside each trace; t values go in order
    recs = [assembly.heat_trace_M_regularized(model, t, workers=pool_size(cfg)) for t in ts]
    rows = [asdict(r) for r in recs]
    report = None
    if cfg.asymptotics:
        report = {"traces": rows}
        try:
            report["asymptotics"] = assembly.asymptotics_report(model)
        except WarpedHeatError as exc:
            report["asymptotics"] = {"error": type(exc).__name__, "message": str(exc)}
        try:
            A0, A1 = assembly.heat_coeff_A01_M(model)
            report["coefficients"] = {"A0": A0, "A1": A1}
        except DivergentCoefficient as exc:
            report["coefficients"] = {"error": type(exc).__name__, "message": str(exc)}
    return Result(["t", "trace_total", "trace_D0", "tail_bound"], rows, report=report)


def cmd_coeffs(cfg):
    rows = []
    for k in range(cfg.kmax + 1):
        p = diffpoly.restructured_coefficient(k) if cfg.restructured else diffpoly.heat_coefficient(k)
        row = {"k": k, "coefficient": diffpoly.to_text(p), "terms": len(p.terms)}
        row["C_k"] = diffpoly.global_Ck_cusp(k, cfg.nu, cfg.b) if k >= 1 else float("nan")
        rows.append(row)
    return Result(["k", "terms", "C_k", "coefficient"], rows)


def _check(name, ok, metric):
    return {"check": name, "status": "PASS" if ok else "FAIL", "metric": float(metric)}


def _verify_identity(cfg):
    out = []
    for nu in (1.0, 1.5):
        rep = assembly.verify_trace_identity(nu, cfg.b, [0.02, 0.05, 0.1], 2)
        out.append(_check(f"identity_nu{nu:g}", rep.status == "PASS", rep.exponent))
    return out


def _verify_unitarity(cfg):
    worst = 0.0
    for nu in (0.7, 1.5, 2.5, 3.3):
        op = spectral1d.PoschlTellerOp(nu, cfg.b)
        for p in np.geomspace(0.01, 20, 40):
            mu = 1j * p
            T, R = complex(spectral1d.transmission(op, mu)), complex(spectral1d.reflection(op, mu))
            worst = max(worst, abs(abs(T) ** 2 + abs(R) ** 2 - 1.0))
            C = spectral1d.scattering_data(op).C
            worst = max(worst, float(np.max(np.abs(C(mu) @ C(-mu) - np.eye(2)))))
    return [_check("unitarity", worst <= 1e-10, worst)]


def _verify_reflectionless(cfg):
    worst = max(abs(complex(spectral1d.reflection(spectral1d.PoschlTellerOp(nu, cfg.b), 1j * p)))
                for nu in (1, 2, 3) for p in np.linspace(0.05, 20, 60))
    return [_check("reflectionless", worst <= 1e-12, worst)]


def _verify_symbolic(cfg):
    q = diffpoly.DiffPoly.Q
    ok = diffpoly.heat_coefficient(1) == -q(0)
    ok &= diffpoly.heat_coefficient(2) == q(0) * q(0) - Fraction(1, 3) * q(2)
    for k in range(1, 7):
        ok &= diffpoly.heat_coefficient(k).coefficient(2 * k - 2) == diffpoly.linear_coefficient(k)
    return [_check("symbolic", ok, 0.0 if ok else 1.0)]


def _verify_volume(cfg):
    worst = 0.0
    for nu in np.linspace(0.3, 4.0, 5):
        for b in (0.5, 1.0, 2.0, 3.0):
            w = geometry.make_cusp_warp(nu, 1.0, b)
            exact = geometry.volume_beta_closed_form(nu, b)
            worst = max(worst, abs(geometry.volume_beta(w, 1.0) / exact - 1.0))
    return [_check("volume", worst <= 1e-9, worst)]


def _verify_weyl(cfg):
    t = 1e-3
    out = []
    for name, spec in (("weyl_S2", cross_spectrum.sphere_spectrum(3, 1.0, 10)),
                       ("weyl_T2", cross_spectrum.torus_spectrum([1, 1], 10))):
        spec = cross_spectrum.extend(spec, cross_spectrum.required_cutoff(spec, t))
        ratio = t * cross_spectrum.heat_trace_N(spec, t) / (spec.A[0] / (4 * np.pi))
        out.append(_check(name, abs(ratio - 1.0) <= 0.02, abs(ratio - 1.0)))
    return out


VERIFY_SUITES = {
    "identity": _verify_identity,
    "unitarity": _verify_unitarity,
    "reflectionless": _verify_reflectionless,
    "symbolic": _verify_symbolic,
    "volume": _verify_volume,
    "weyl": _verify_weyl,
}


def cmd_verify(cfg):
    names = list(VERIFY_SUITES) if cfg.checks == "all" else [c.strip() for c in cfg.checks.split(",")]
    unknown = [n for n in names if n not in VERIFY_SUITES]
    if unknown:
        raise ConfigError(f"unknown check(s): {', '.join(unknown)}")
    rows = []
    for name in names:
        t0 = time.perf_counter()
        for row in VERIFY_SUITES[name](cfg):
            row["seconds"] = round(time.perf_counter() - t0, 3)
            rows.append(row)
    failed = any(r["status"] != "PASS" for r in rows)
    return Result(["check", "status", "metric", "seconds"], rows, report={"checks": rows}, failed=failed,
                  summary="\n".join(f"{r['status']} {r['check']} {r['metric']:.3g}" for r in rows))


HANDLERS = {
    "spectrum": cmd_spectrum,
    "scattering": cmd_scattering,
    "heat": cmd_heat,
    "trace": cmd_trace,
    "coeffs": cmd_coeffs,
    "verify": cmd_verify,
}


# -- argument parsing -----------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--nu", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--output", "-o", help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--threads", type=int, help="worker pool size (default: WARPEDHEAT_THREADS or CPU count)")
    cross = argparse.ArgumentParser(add_help=False)
    c = cross.add_argument_group("cross-section")
    c.add_argument("--cross", choices=("sphere", "torus"))
    c.add_argument("--n", type=int, help="sphere: dimension of M (N = S^{n-1})")
    c.add_argument("--a", type=float, help="sphere radius")
    c.add_argument("--radii", help="torus radii, comma-separated (rationals allowed, e.g. 1/2)")
    c.add_argument("--kmax", type=int)
    c.add_argument("--cutoff", type=float, help="torus eigenvalue cutoff (default kmax)")

    parser = argparse.ArgumentParser(prog="warpedheat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("spectrum", parents=[common, cross], help="discrete spectrum of D_0 or cross-section levels")
    p.add_argument("--op", choices=("d0",))
    p = sub.add_parser("scattering", parents=[common], help="T and R on the imaginary axis")
    p.add_argument("--p-grid", dest="p_grid")
    p = sub.add_parser("heat", parents=[common], help="heat kernel of D_0 vs finite differences")
    p.add_argument("--t-grid", dest="t_grid")
    p.add_argument("--y-grid", dest="y_grid")
    p.add_argument("--yp-grid", dest="yp_grid")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--oracle-L", dest="oracle_L", type=float)
    p.add_argument("--oracle-h", dest="oracle_h", type=float)
    p.add_argument("--oracle-steps", dest="oracle_steps", type=int)
    p = sub.add_parser("trace", parents=[common, cross], help="regularised heat traces")
    p.add_argument("--t-grid", dest="t_grid")
    p.add_argument("--asymptotics", action="store_true", default=None)
    p = sub.add_parser("coeffs", parents=[common], help="heat-kernel coefficients c_k and C_k")
    p.add_argument("--kmax", type=int)
    p.add_argument("--restructured", action="store_true", default=None)
    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--checks", help="comma-separated subset of: " + ",".join(VERIFY_SUITES))
    return parser


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = build_config(ns)
        result = HANDLERS[cfg.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except WarpedHeatError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_CHECK
    text = result.render(cfg)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if result.summary:
        print(result.summary, file=sys.stderr)
    return EXIT_CHECK if result.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
