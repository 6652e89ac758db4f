"""Closed-form number statistics of the Heisenberg family on balls and polydisks.

The Heisenberg DPP on C^D has intensity pi^{-D} with respect to Lebesgue
measure on R^{2D}.  For the ball of radius R its count has mean
R^{2D}/D! and a variance expressible through modified Bessel functions of
argument 2R^2 or, equivalently, through a single 2F2 value.  For the
polydisk (product of D planar disks) the count is a sum of independent
Bernoulli variables with success probabilities prod_l p_{n_l}(R), where
p_k(R) = P(k+1, R^2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import specfun
from .errors import CancellationGuardError, DomainError, FitDegenerateError
from .specfun import Accuracy

SQRT_PI = math.sqrt(math.pi)


class Route(str, enum.Enum):
    BESSEL = "bessel"
    HYP2F2 = "hyp2f2"
    QUADRATURE = "quadrature"
    SPECTRAL = "spectral"
    MONTECARLO = "montecarlo"


@dataclass(frozen=True)
class HeisenbergParams:
    D: int
    R: float

    def __post_init__(self):
        if int(self.D) != self.D or self.D < 1:
            raise DomainError(f"D must be a positive integer, got {self.D}")
        if not (self.R >= 0.0) or math.isinf(self.R):
            raise DomainError(f"R must be a finite nonnegative number, got {self.R}")
        object.__setattr__(self, "D", int(self.D))
        object.__setattr__(self, "R", float(self.R))

    @property
    def d(self):
        return 2 * self.D


def _params(p, R=None):
    if isinstance(p, HeisenbergParams):
        return p
    return HeisenbergParams(p, R)


def _require_positive_R(p):
    if p.R <= 0.0:
        raise DomainError("this operation requires R > 0")


@dataclass(frozen=True)
class VarianceReport:
    mean: float
    variance: float
    ratio: float
    route: Route
    err_estimate: float = 0.0

    @classmethod
    def build(cls, mean, variance, route, err_estimate=0.0):
        ratio = variance / mean if mean > 0 else 1.0
        return cls(float(mean), float(variance), float(ratio), Route(route), float(err_estimate))


@dataclass(frozen=True)
class AsymptoticSeries:
    """Large-R expansion of Var/E, i.e. prefactor / R * sum_k coeffs[k] R^{-2k}."""

    prefactor: float
    coeffs: tuple
    k_max: int
    trunc_error: float = 0.0

    def evaluate(self, R):
        inv2 = 1.0 / (R * R)
        total = 0.0
        for c in reversed(self.coeffs):
            total = total * inv2 + c
        return self.prefactor / R * total


class HUClass(str, enum.Enum):
    CLASS_I = "ClassI"
    CLASS_II = "ClassII"
    CLASS_III = "ClassIII"
    NOT_HYPERUNIFORM = "NotHyperuniform"


@dataclass(frozen=True)
class HyperuniformityClass:
    label: HUClass
    fitted_exponent: float
    fit_range: tuple
    d: int
    residual_surface: float = float("nan")
    residual_surface_log: float = float("nan")
    extra: dict = field(default_factory=dict, compare=False)


# --------------------------------------------------------------------------
# balls
# --------------------------------------------------------------------------

def mean_ball(p, R=None):
    """E[count in B_R] = R^{2D} / D!, evaluated in log space."""
    p = _params(p, R)
    if p.R == 0.0:
        return 0.0
    return math.exp(2 * p.D * math.log(p.R) - math.lgamma(p.D + 1.0))


def variance_ball_bessel(p, R=None, acc=specfun.DEFAULT_ACCURACY):
    """Number variance on the ball from the modified-Bessel closed form.

    Var = mean * e^{-2R^2} [I_0 + 2 (I_1 + ... + I_{D-1}) + I_D](2R^2), with
    every e^{-x} I_n(x) taken from the overflow-free scaled evaluation.
    """
    p = _params(p, R)
    _require_positive_R(p)
    mean = mean_ball(p)
    x = 2.0 * p.R * p.R
    vals = [specfun.bessel_i_scaled(n, x, acc, full_output=True) for n in range(p.D + 1)]
    weights = [1.0] + [2.0] * (p.D - 1) + [1.0]
    bracket = math.fsum(w * v for w, (v, _) in zip(weights, vals))
    err = math.fsum(w * e for w, (_, e) in zip(weights, vals))
    if bracket > 0.5:
        # e^{-x}(I_0 + 2 sum_{n>0} I_n) = 1, so the bracket is one minus a
        # short, well-conditioned tail; this keeps Var <= E in floating point
        bracket = 1.0 - _bessel_tail(p.D, x, vals[p.D][0], acc)
    variance = mean * bracket
    return VarianceReport.build(
        mean, variance, Route.BESSEL, mean * err + 4 * specfun.EPS * variance
    )


def _bessel_tail(D, x, i_d, acc):
    """e^{-x} [I_D + 2 sum_{n>D} I_n](x)."""
    terms = [i_d]
    n = D + 1
    while True:
        t = 2.0 * specfun.bessel_i_scaled(n, x, acc)
        terms.append(t)
        if t <= 1e-3 * specfun.EPS * terms[0] or t == 0.0:
            break
        n += 1
    return math.fsum(terms)


def hyp2f2_r_max():
    """Largest R for which the 2F2 argument -4R^2 stays inside its guard."""
    return math.sqrt(specfun.HYP2F2_X_MAX / 4.0)


def variance_ball_2f2(p, R=None, acc=None):
    """Number variance on the ball from the single-2F2 closed form.

    Var = m [1 - m 2F2(D, D+1/2; D+1, 2D+1; -4R^2)] with m = R^{2D}/D!.
    The alternating series loses accuracy quickly as R grows; beyond the
    guard a :class:`CancellationGuardError` points callers to the Bessel
    route.
    """
    p = _params(p, R)
    _require_positive_R(p)
    if p.R > hyp2f2_r_max():
        raise CancellationGuardError(
            f"R={p.R} exceeds the 2F2 guard R <= {hyp2f2_r_max():.6g}; use the bessel route"
        )
    D = p.D
    mean = mean_ball(p)
    # Var = m - m^2 F, so an error dF costs m^2 dF; budget 1e-12 m for it
    acc = acc or Accuracy(rel_tol=1e-12, abs_tol=1e-12 / max(mean, 1e-300))
    try:
        F, errF = specfun.hyp2f2(
            D, D + 0.5, D + 1.0, 2.0 * D + 1.0, -4.0 * p.R * p.R, acc, full_output=True
        )
    except CancellationGuardError as exc:
        raise CancellationGuardError(f"{exc}; use the bessel route", exc.estimate) from exc
    mF = mean * F
    variance = mean * (1.0 - mF)
    err = mean * mean * errF + 4 * specfun.EPS * mean * max(1.0, abs(mF))
    return VarianceReport.build(mean, variance, Route.HYP2F2, err)


def ratio(p, R=None):
    """Var/E on the ball; 1 at R = 0 by continuity (Poissonian limit)."""
    p = _params(p, R)
    if p.R == 0.0:
        return 1.0
    return variance_ball_bessel(p).ratio


def asymptotic_coeffs(D, k_max):
    """c_k = (-1)^k alpha_k(D) / ((2k+1) k! 2^{4k}) for k = 0..k_max."""
    out = []
    for k in range(k_max + 1):
        a = specfun.alpha_coeff_int(k, D)
        out.append((-1) ** k * a / ((2 * k + 1) * math.factorial(k) * 16**k))
    return out


def asymptotic_ratio(p, k_max, R=None):
    """Truncated large-R expansion of Var/E for the ball.

    Returns ``(value, series)``.  If the terms c_k R^{-2k} start growing
    before ``k_max`` the sum is cut at the smallest one and ``series.k_max``
    reports where; ``series.trunc_error`` is the size of the first omitted
    term in units of the ratio.
    """
    p = _params(p, R)
    _require_positive_R(p)
    if k_max < 0:
        raise DomainError("k_max must be nonnegative")
    coeffs = asymptotic_coeffs(p.D, k_max + 1)
    inv2 = 1.0 / (p.R * p.R)
    mags = [abs(c) * inv2**k for k, c in enumerate(coeffs)]
    kept = k_max
    for k in range(1, k_max + 1):
        if mags[k] > mags[k - 1]:
            kept = k - 1
            break
    prefactor = p.D / SQRT_PI
    series = AsymptoticSeries(
        prefactor=prefactor,
        coeffs=tuple(coeffs[: kept + 1]),
        k_max=kept,
        trunc_error=prefactor / p.R * mags[kept + 1],
    )
    return series.evaluate(p.R), series


# --------------------------------------------------------------------------
# polydisks
# --------------------------------------------------------------------------

def spectrum_cutoff(R, shift=0, floor=1e-16):
    """Number of spectral indices k to keep: smallest k with p_{k+shift}(R) < floor
    and k > R^2 + 20 sqrt(R^2 + 1)."""
    x = R * R
    k = int(math.floor(x + 20.0 * math.sqrt(x + 1.0))) + 1
    probs = specfun.poisson_tail_array(x, k + shift + 64)
    while True:
        if k + shift >= len(probs):
            probs = specfun.poisson_tail_array(x, 2 * (k + shift) + 64)
        if probs[k + shift] < floor:
            return k
        k += 1


def _tail_after(prob_last, x, index_last):
    """Geometric bound on sum_{j > index_last} p_j given p_{index_last}."""
    r = x / (index_last + 2.0)
    if r >= 1.0:
        return math.inf
    return prob_last * r / (1.0 - r)


def polydisk_sums(R, trunc=None):
    """(sum_k p_k(R), sum_k p_k(R)^2, tail bound on the omitted terms)."""
    floor = max(trunc.abs_tol, 1e-300) if trunc and trunc.abs_tol > 0 else 1e-16
    x = R * R
    K = spectrum_cutoff(R, 0, floor)
    probs = specfun.poisson_tail_array(x, K)
    tail = _tail_after(probs[-1], x, K)
    s1 = math.fsum(probs)
    s2 = math.fsum(probs * probs)
    return s1, s2, tail


def mean_polydisk(p, trunc=None, R=None):
    """(sum_k p_k(R))^D; analytically equal to R^{2D}."""
    p = _params(p, R)
    if p.R == 0.0:
        return 0.0
    s1, _, _ = polydisk_sums(p.R, trunc)
    return s1**p.D


def ratio_polydisk(p, trunc=None, R=None):
    """Var/E on the polydisk: 1 - (sum p_k^2 / sum p_k)^D."""
    p = _params(p, R)
    if p.R == 0.0:
        return 1.0
    s1, s2, _ = polydisk_sums(p.R, trunc)
    return -math.expm1(p.D * math.log(s2 / s1))


def variance_polydisk(p, trunc=None, R=None):
    """(sum p_k)^D - (sum p_k^2)^D, reported with the truncation bound."""
    p = _params(p, R)
    _require_positive_R(p)
    s1, s2, tail = polydisk_sums(p.R, trunc)
    mean = s1**p.D
    rat = -math.expm1(p.D * math.log(s2 / s1))
    variance = mean * rat
    err = p.D * (s1 + tail) ** (p.D - 1) * 2 * tail + 8 * specfun.EPS * mean
    return VarianceReport.build(mean, variance, Route.SPECTRAL, err)


def polydisk_expansion(D, R, order=2):
    """Large-R expansion of the polydisk Var/E through R^{-1-order}."""
    terms = [1.0, -(D - 1) / (2.0 * SQRT_PI) / R]
    if order >= 2:
        terms.append(0.5 * ((D - 1) * (D - 2) / (3.0 * math.pi) - 0.125) / (R * R))
    return D / SQRT_PI / R * sum(terms[: order + 1]), terms


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

def _loglog_fit(Rs, var):
    """(slope, intercept, rms residual) of the least-squares line through log-log data."""
    x = np.log(Rs)
    y = np.log(var)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def _const_fit_rms(y):
    return float(np.sqrt(np.mean((y - y.mean()) ** 2)))


def classify_variance(
    var_fn: Callable[[float], float],
    d: int,
    fit_range: Sequence[float],
    n_points: int,
    tol: float = 0.05,
):
    """Hyperuniformity class of a number-variance curve Var(R) in R^d.

    Fits log Var against log R on a log-spaced grid.  Two one-parameter
    models are then compared on g(R) = Var / R^{d-1}: g constant (surface
    law) and g proportional to log R.  Exponent near d means no
    hyperuniformity; near d-1 with the constant model winning means Class I;
    the logarithmic model beating both the constant model and a free power
    law means Class II; anything strictly between
    d-1 and d otherwise means Class III.
    """
    r_min, r_max = float(fit_range[0]), float(fit_range[1])
    if not (r_min > 0 and r_max > r_min) or n_points < 5:
        raise FitDegenerateError(
            f"degenerate fit grid: range=({r_min}, {r_max}), n_points={n_points}"
        )
    Rs = np.geomspace(r_min, r_max, n_points)
    if np.unique(Rs).size < 5 or (np.log(r_max) - np.log(r_min)) < 1e-6:
        raise FitDegenerateError("fit grid collapsed")
    var = np.array([var_fn(float(R)) for R in Rs])
    if not np.all(np.isfinite(var)) or np.any(var <= 0):
        raise FitDegenerateError("variance must be finite and positive on the fit grid")
    slope, _, res_power = _loglog_fit(Rs, var)
    log_g = np.log(var) - (d - 1) * np.log(Rs)
    res_surface = _const_fit_rms(log_g)
    res_log = _const_fit_rms(log_g - np.log(np.log(Rs)))

    if slope >= d - tol:
        label = HUClass.NOT_HYPERUNIFORM
    elif slope <= d - 1 + tol and res_surface <= res_log:
        label = HUClass.CLASS_I
    elif res_log < min(res_surface, res_power) and slope < d:
        label = HUClass.CLASS_II
    else:
        label = HUClass.CLASS_III
    return HyperuniformityClass(
        label=label,
        fitted_exponent=slope,
        fit_range=(r_min, r_max),
        d=d,
        residual_surface=res_surface,
        residual_surface_log=res_log,
        extra={"residual_power": res_power},
    )


def classify(D, fit_range=(10.0, 100.0), n_points=20, tol=0.05):
    """Classify the Heisenberg DPP on C^D from its exact ball variances."""
    if int(D) != D or D < 1:
        raise DomainError("D must be a positive integer")
    return classify_variance(
        lambda R: variance_ball_bessel(HeisenbergParams(D, R)).variance,
        2 * int(D),
        fit_range,
        n_points,
        tol,
    )


def beta_identity_residual(k, D):
    """alpha_k(0) + 2 sum_{0<n<D} alpha_k(n) + alpha_k(D) - 2D alpha_k(D)/(2k+1).

    Evaluated in exact integer arithmetic; returns a ``Fraction`` that is
    zero whenever the identity holds.
    """
    from fractions import Fraction

    lhs = specfun.alpha_coeff_int(k, 0) + specfun.alpha_coeff_int(k, D)
    lhs += 2 * sum(specfun.alpha_coeff_int(k, n) for n in range(1, D))
    return Fraction(lhs) - Fraction(2 * D * specfun.alpha_coeff_int(k, D), 2 * k + 1)
