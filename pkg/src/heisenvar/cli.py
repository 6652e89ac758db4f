"""Command-line front end.

    heisenvar variance -D 1 -R 1 --route all
    heisenvar scan -D 2 --rmin 0.5 --rmax 50 -n 40 --log
    heisenvar expand -D 1 --kmax 1
    heisenvar classify -D 2 --rmin 10 --rmax 100 -n 20
    heisenvar sample -D 1 -R 5 --n-samples 1000000 --seed 7
    heisenvar verify

Rows go to stdout as CSV (columns D,R,mean,variance,ratio,route,err_estimate,extra)
or JSON; diagnostics go to stderr.  Exit codes: 0 ok, 2 usage error,
3 numerical guard tripped, 4 verification failure.

Default tolerances can be overridden through the environment:
HEISENVAR_REL_TOL (special functions), HEISENVAR_QUAD_REL_TOL and
HEISENVAR_QUAD_ABS_TOL (quadrature).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import exact, fourier, spectral
from .errors import DomainError, HeisenvarError
from .exact import HeisenbergParams, Route, VarianceReport
from .specfun import Accuracy

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

COLUMNS = ("D", "R", "mean", "variance", "ratio", "route", "err_estimate", "extra")
ROUTES = ("bessel", "hyp2f2", "quadrature", "spectral", "montecarlo", "all")
ALL_ROUTES = ("bessel", "hyp2f2", "quadrature", "spectral")


class UsageError(Exception):
    pass


def _fmt(x):
    if isinstance(x, float):
        return "%.15g" % x
    return str(x)


@dataclass
class OutputRow:
    D: int
    R: float
    mean: float
    variance: float
    ratio: float
    route: str
    err_estimate: float = 0.0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_report(cls, D, R, rep: VarianceReport, extra=None):
        route = rep.route.value if isinstance(rep.route, Route) else str(rep.route)
        return cls(D, R, rep.mean, rep.variance, rep.ratio, route, rep.err_estimate, extra or {})

    def cells(self):
        extra = ";".join(f"{k}={_fmt(v)}" for k, v in self.extra.items())
        vals = (self.D, float(self.R), self.mean, self.variance, self.ratio,
                self.route, self.err_estimate, extra)
        return [_fmt(v) for v in vals]

    def as_dict(self):
        return {
            "D": self.D, "R": float(self.R), "mean": self.mean, "variance": self.variance,
            "ratio": self.ratio, "route": self.route, "err_estimate": self.err_estimate,
            "extra": self.extra,
        }


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def _env_float(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"environment variable {name} is not a number: {raw!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-D", type=int, default=1, help="complex dimension (default 1)")
    common.add_argument("-R", type=float, action="append", help="radius; repeatable")
    common.add_argument("--rmin", type=float)
    common.add_argument("--rmax", type=float)
    common.add_argument("-n", "--n-points", type=int, default=20, dest="n_points")
    spacing = common.add_mutually_exclusive_group()
    spacing.add_argument("--log", dest="spacing", action="store_const", const="log")
    spacing.add_argument("--linear", dest="spacing", action="store_const", const="linear")
    common.set_defaults(spacing="log")
    common.add_argument("--route", choices=ROUTES, default="bessel")
    common.add_argument("--window", choices=("ball", "polydisk"), default="ball")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n-samples", type=int, default=100_000)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--kmax", type=int, default=5)
    common.add_argument("--output", choices=("csv", "json"), default="csv")
    common.add_argument("--rel-tol", type=float, help="special-function relative tolerance")
    common.add_argument("--quad-rel-tol", type=float)
    common.add_argument("--quad-abs-tol", type=float)

    parser = argparse.ArgumentParser(
        prog="heisenvar",
        description="Number variance and counting statistics of Heisenberg DPPs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("mean", "expected count"),
        ("variance", "number variance by one or all routes"),
        ("ratio", "variance-to-mean ratio"),
        ("expand", "large-R expansion coefficients"),
        ("classify", "hyperuniformity class from a log-log fit"),
        ("sample", "Monte Carlo counts from the Bernoulli spectrum"),
        ("scan", "variance table over an R grid"),
        ("verify", "run the identity suite"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


@dataclass
class RunConfig:
    command: str
    D: int
    radii: list
    route: str
    window: str
    seed: int
    n_samples: int
    workers: int
    k_max: int
    output: str
    acc: Accuracy
    quad: fourier.QuadratureSpec
    rmin: float = None
    rmax: float = None
    n_points: int = 20


def make_config(args):
    if args.D < 1:
        raise UsageError("-D must be a positive integer")
    rel = args.rel_tol if args.rel_tol is not None else _env_float("HEISENVAR_REL_TOL", 2.0**-53)
    qrel = args.quad_rel_tol if args.quad_rel_tol is not None else _env_float(
        "HEISENVAR_QUAD_REL_TOL", 1e-12)
    qabs = args.quad_abs_tol if args.quad_abs_tol is not None else _env_float(
        "HEISENVAR_QUAD_ABS_TOL", 1e-15)
    try:
        acc = Accuracy(rel_tol=rel)
        quad = fourier.QuadratureSpec(rel_tol=qrel, abs_tol=qabs)
    except DomainError as exc:
        raise UsageError(str(exc))

    radii = list(args.R or [])
    if args.command == "scan" or (not radii and args.rmin is not None):
        if args.rmin is None or args.rmax is None:
            raise UsageError("scan needs --rmin and --rmax")
        if not (0 < args.rmin <= args.rmax) or args.n_points < 1:
            raise UsageError("need 0 < rmin <= rmax and n >= 1")
        if args.spacing == "log":
            radii = list(np.geomspace(args.rmin, args.rmax, args.n_points))
        else:
            radii = list(np.linspace(args.rmin, args.rmax, args.n_points))
    if any(not math.isfinite(r) or r < 0 for r in radii):
        raise UsageError("radii must be finite and nonnegative")
    if args.command == "sample" and args.n_samples < 1:
        raise UsageError("--n-samples must be >= 1")
    if args.route == "montecarlo" and args.n_samples < 1:
        raise UsageError("route montecarlo needs --n-samples >= 1")
    if args.command in ("mean", "variance", "ratio", "sample") and not radii:
        raise UsageError(f"{args.command} needs -R or a range")
    if args.window == "polydisk" and args.route in ("hyp2f2", "quadrature", "all"):
        raise UsageError(f"route {args.route} is only available for the ball window")
    return RunConfig(
        command=args.command, D=args.D, radii=[float(r) for r in radii], route=args.route,
        window=args.window, seed=args.seed, n_samples=args.n_samples, workers=args.workers,
        k_max=args.kmax, output=args.output, acc=acc, quad=quad, rmin=args.rmin,
        rmax=args.rmax, n_points=args.n_points,
    )


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _spectrum(cfg, R):
    if cfg.window == "ball":
        return spectral.ball_spectrum(cfg.D, R)
    return spectral.polydisk_spectrum(cfg.D, R)


def _montecarlo_row(cfg, R):
    s = _spectrum(cfg, R)
    st = spectral.sample_counts(s, cfg.n_samples, cfg.seed, workers=cfg.workers)
    mean = st.mean
    ratio = st.variance / mean if mean > 0 else 1.0
    skew, kurt = spectral.predicted_shape(s)
    extra = {
        "n_samples": st.n_samples, "seed": st.seed, "skewness": st.skewness,
        "excess_kurtosis": st.excess_kurtosis, "predicted_skewness": skew,
        "predicted_excess_kurtosis": kurt,
    }
    return OutputRow(cfg.D, R, mean, st.variance, ratio, "montecarlo", st.variance_se, extra)


def variance_row(cfg, R, route):
    p = HeisenbergParams(cfg.D, R)
    if route == "montecarlo":
        return _montecarlo_row(cfg, R)
    if cfg.window == "polydisk":
        if route == "spectral":
            s = spectral.polydisk_spectrum(cfg.D, R)
            m, v = spectral.spectrum_moments(s)
            return OutputRow.from_report(cfg.D, R, VarianceReport.build(m, v, Route.SPECTRAL,
                                                                        s.tail_bound),
                                         {"window": "polydisk"})
        rep = exact.variance_polydisk(p)
        return OutputRow.from_report(cfg.D, R, rep, {"window": "polydisk", "closed_form": 1})
    if route == "bessel":
        rep = exact.variance_ball_bessel(p, acc=cfg.acc)
    elif route == "hyp2f2":
        rep = exact.variance_ball_2f2(p)
    elif route == "quadrature":
        rep = fourier.variance_heisenberg_quadrature(cfg.D, R, cfg.quad)
    elif route == "spectral":
        s = spectral.ball_spectrum(cfg.D, R)
        m, v = spectral.spectrum_moments(s)
        rep = VarianceReport.build(m, v, Route.SPECTRAL, s.tail_bound)
    else:
        raise UsageError(f"unknown route {route!r}")
    return OutputRow.from_report(cfg.D, R, rep)


def _all_routes(cfg, R):
    rows = []
    for route in ALL_ROUTES:
        if route == "hyp2f2" and R > exact.hyp2f2_r_max():
            print(f"note: hyp2f2 route skipped at R={R:g} (beyond its usable range)",
                  file=sys.stderr)
            continue
        rows.append(variance_row(cfg, R, route))
    worst, pair = 0.0, ""
    for a, b in itertools.combinations(rows, 2):
        gap = abs(a.variance - b.variance)
        if gap >= worst:
            worst, pair = gap, f"{a.route}-{b.route}"
    mean = rows[0].mean
    rows.append(OutputRow(cfg.D, R, mean, worst, worst / mean if mean > 0 else 0.0,
                          "max_discrepancy", 0.0, {"pair": pair}))
    return rows


def cmd_rows(cfg):
    # mean, variance and ratio share one row layout
    rows = []
    for R in cfg.radii:
        if cfg.route == "all":
            rows.extend(_all_routes(cfg, R))
        else:
            rows.append(variance_row(cfg, R, cfg.route))
    return rows


def cmd_sample(cfg):
    return [_montecarlo_row(cfg, R) for R in cfg.radii]


def cmd_expand(cfg, out):
    radii = cfg.radii or [20.0]
    coeffs = exact.asymptotic_coeffs(cfg.D, cfg.k_max)
    prefactor = cfg.D / exact.SQRT_PI
    comparison = []
    for R in radii:
        if R <= 0:
            raise UsageError("expand needs R > 0")
        value, series = exact.asymptotic_ratio(HeisenbergParams(cfg.D, R), cfg.k_max)
        ex = exact.ratio(HeisenbergParams(cfg.D, R))
        comparison.append({
            "R": R, "exact": ex, "truncated": value, "rel_diff": (value - ex) / ex,
            "k_used": series.k_max, "trunc_error": series.trunc_error,
        })
    if cfg.output == "json":
        json.dump({"D": cfg.D, "prefactor": prefactor, "k_max": cfg.k_max,
                   "coefficients": coeffs, "comparison": comparison}, out, indent=2)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["prefactor", _fmt(prefactor)])
    w.writerow(["k", "coefficient"])
    for k, c in enumerate(coeffs):
        w.writerow([k, _fmt(float(c))])
    w.writerow(["R", "exact", "truncated", "rel_diff", "k_used", "trunc_error"])
    for c in comparison:
        w.writerow([_fmt(c["R"]), _fmt(c["exact"]), _fmt(c["truncated"]),
                    _fmt(c["rel_diff"]), c["k_used"], _fmt(c["trunc_error"])])


def cmd_classify(cfg, out):
    rmin = cfg.rmin if cfg.rmin is not None else 10.0
    rmax = cfg.rmax if cfg.rmax is not None else 100.0
    hc = exact.classify(cfg.D, (rmin, rmax), cfg.n_points)
    rec = {
        "D": cfg.D, "d": hc.d, "label": hc.label.value, "fitted_exponent": hc.fitted_exponent,
        "rmin": rmin, "rmax": rmax, "n_points": cfg.n_points,
        "residual_surface": hc.residual_surface, "residual_surface_log": hc.residual_surface_log,
    }
    if cfg.output == "json":
        json.dump(rec, out, indent=2)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(rec))
    w.writerow([_fmt(v) for v in rec.values()])


# --------------------------------------------------------------------------
# verification suite
# --------------------------------------------------------------------------

def verification_checks(quad=None):
    """(name, value, threshold) triples; a check passes when value <= threshold."""
    quad = quad or fourier.QuadratureSpec()
    checks = []

    worst = max(fourier.recurrence_check_An(D, R, quad) for D in (1, 2, 3, 4) for R in (0.5, 1, 3))
    checks.append(("recurrence_An", worst, 1e-8))

    nonzero = sum(exact.beta_identity_residual(k, D) != 0 for k in range(7) for D in range(1, 7))
    checks.append(("beta_identity", float(nonzero), 0.0))

    worst = 0.0
    for D in range(1, 6):
        for R in (0.5, 1.0, 2.0, 5.0, 10.0):
            m, _ = spectral.spectrum_moments(spectral.ball_spectrum(D, R))
            ref = exact.mean_ball(HeisenbergParams(D, R))
            worst = max(worst, abs(m - ref) / ref)
    checks.append(("spectral_mean", worst, 1e-10))

    worst = 0.0
    kap = np.array([0.0, 0.3, 1.0, 2.7, 7.5, 19.0])
    for d in (1, 2, 3, 4, 6):
        for R in (0.5, 1.0, 3.0):
            a = fourier.intersection_volume_ft(d, R, kap)
            b = fourier.ball_indicator_ft(d, R, kap) ** 2
            nz = b != 0
            worst = max(worst, float(np.max(np.abs(a[nz] - b[nz]) / np.abs(b[nz]))))
    checks.append(("intersection_ft_square", worst, 1e-12))

    worst = 0.0
    for d, R in ((2, 1.0), (3, 2.0), (6, 5.0)):
        rep = fourier.variance_poisson(d, R, 0.7)
        ref = 0.7 * fourier.ball_volume(d, R)
        worst = max(worst, abs(rep.variance - ref) / ref)
    checks.append(("poisson_exact", worst, 1e-14))

    worst = 0.0
    for R in (0.5, 1.0, 2.0, 5.0):
        a = exact.variance_polydisk(HeisenbergParams(1, R)).variance
        b = exact.variance_ball_bessel(HeisenbergParams(1, R)).variance
        worst = max(worst, abs(a - b) / b)
    checks.append(("polydisk_equals_ball_D1", worst, 1e-10))
    return checks


def cmd_verify(cfg, out):
    checks = verification_checks(cfg.quad)
    failed = [c for c in checks if not c[1] <= c[2]]
    if cfg.output == "json":
        json.dump([{"check": n, "value": v, "threshold": t, "ok": v <= t} for n, v, t in checks],
                  out, indent=2)
        out.write("\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["check", "status", "value", "threshold"])
        for n, v, t in checks:
            w.writerow([n, "pass" if v <= t else "FAIL", _fmt(float(v)), _fmt(float(t))])
    for n, v, t in failed:
        print(f"verify: {n} failed ({v:.3g} > {t:.3g})", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def write_rows(rows, output, out):
    if output == "json":
        json.dump([r.as_dict() for r in rows], out, indent=2)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.cells())


def run(cfg, out=None):
    out = out or sys.stdout
    if cfg.command == "verify":
        return cmd_verify(cfg, out)
    if cfg.command == "expand":
        cmd_expand(cfg, out)
    elif cfg.command == "classify":
        cmd_classify(cfg, out)
    elif cfg.command == "sample":
        write_rows(cmd_sample(cfg), cfg.output, out)
    else:
        write_rows(cmd_rows(cfg), cfg.output, out)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return run(cfg)
    except (UsageError, DomainError) as exc:
        print(f"heisenvar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HeisenvarError as exc:
        print(f"heisenvar: numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
