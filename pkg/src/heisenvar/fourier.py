"""Radial Fourier machinery for number variances of translation-invariant processes.

Everything here works on radial functions in R^d.  The number variance of a
ball can be computed either in real space, from the total correlation
function c(r) weighted by the intersection volume of two balls, or in
Fourier space, from the structure factor s(kappa) weighted by
J_{d/2}(kappa R)^2 / kappa.  The Heisenberg family supplies
c(r) = -exp(-r^2) and s(kappa) = 1 - exp(-kappa^2 / 4) with intensity
pi^{-D}; the Poisson process (c = 0, s = 1) is the non-hyperuniform
baseline.

Fourier-space variances use the identity
int_0^inf J_nu(a x)^2 / x dx = 1 / (2 nu) so that only the integral against
1 - s(kappa), which decays like the profile's envelope, is done
numerically.  Integrals whose integrand decays only algebraically (inverse
transforms of power-law profiles) are computed with a Gaussian regulator
exp(-(kappa/L)^2) and Richardson extrapolation in L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import betainc, gammaln

from . import specfun
from .errors import ConvergenceError, DomainError
from .exact import Route, VarianceReport
from .quadrature import integrate

# exp(-u^2) below this is treated as zero when cutting Gaussian tails
_GAUSS_TAIL = 1e-32
_REG_LEVELS = 7
_REG_SPAN = 6.5  # regulator exp(-(k/L)^2) is ~1e-18 at k = 6.5 L


@dataclass(frozen=True)
class Decay:
    """Envelope of a radial profile: ``gaussian`` exp(-(u/value)^2),
    ``power`` u^{-value}, or ``compact`` (zero beyond ``value``)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "power", "compact"):
            raise DomainError(f"unknown decay kind {self.kind!r}")
        if self.value < 0:
            raise DomainError("decay parameter must be nonnegative")

    @classmethod
    def gaussian(cls, scale):
        return cls("gaussian", float(scale))

    @classmethod
    def power(cls, exponent):
        return cls("power", float(exponent))

    @classmethod
    def compact(cls, limit):
        return cls("compact", float(limit))


@dataclass(frozen=True)
class RadialProfile:
    """A radial function together with what the integrators need to know about it.

    For structure factors (``space == "fourier_space_s"``) ``decay`` is the
    envelope of 1 - s(kappa), and ``complement`` evaluates 1 - s(kappa)
    directly when that can be done without cancellation.  ``oscillation``
    is the angular frequency of any intrinsic oscillation, used to size
    quadrature panels and the regulator.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    space: str = "real_space_c"
    decay: Optional[Decay] = None
    complement: Optional[Callable[[np.ndarray], np.ndarray]] = None
    oscillation: float = 0.0

    def __call__(self, u):
        return self.eval(np.asarray(u, dtype=float))

    def one_minus(self, u):
        u = np.asarray(u, dtype=float)
        if self.complement is not None:
            return self.complement(u)
        return 1.0 - self.eval(u)


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-15
    max_subdivisions: int = 200_000
    tail_strategy: str = "split_add1"
    # acceptance threshold for the error estimate of regulator-extrapolated integrals
    extrapolation_tol: float = 1e-7

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.tail_strategy not in ("split_add1", "gaussian_cutoff"):
            raise DomainError(f"unknown tail strategy {self.tail_strategy!r}")


@dataclass(frozen=True)
class DensityParams:
    rho_tilde: float
    d: int

    def __post_init__(self):
        if self.rho_tilde <= 0:
            raise DomainError("rho_tilde must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("d must be a positive integer")


def heisenberg_density(D):
    return DensityParams(math.pi ** (-D), 2 * D)


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------

def ball_volume(d, R):
    """pi^{d/2} R^d / Gamma(d/2 + 1)."""
    if d < 1:
        raise DomainError("d must be >= 1")
    if R < 0:
        raise DomainError("R must be nonnegative")
    if R == 0:
        return 0.0
    return math.exp(0.5 * d * math.log(math.pi) + d * math.log(R) - math.lgamma(0.5 * d + 1.0))


def _sphere_area(d):
    """sigma_{d-1} = 2 pi^{d/2} / Gamma(d/2)."""
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def ball_indicator_ft(d, R, kappa):
    """Fourier transform of the indicator of B_R in R^d:
    (2 pi)^{d/2} (R/kappa)^{d/2} J_{d/2}(kappa R), equal to the volume at kappa = 0."""
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0):
        raise DomainError("kappa must be nonnegative")
    out = (2.0 * math.pi) ** (0.5 * d) * R**d * specfun.bessel_j_over_power(0.5 * d, k * R)
    return float(out) if np.ndim(kappa) == 0 else out


def intersection_volume_ft(d, R, kappa):
    """(2 pi)^d R^d J_{d/2}(kappa R)^2 / kappa^d, the square of :func:`ball_indicator_ft`."""
    chi = ball_indicator_ft(d, R, kappa)
    return chi * chi


def intersection_volume_real(d, R, r):
    """Volume of B_R intersected with a copy translated by distance r.

    Two hyperspherical caps of height R - r/2, i.e.
    vol(B_R) * I_{1 - (r/2R)^2}((d+1)/2, 1/2) with I the regularized
    incomplete beta function; zero for r >= 2R.
    """
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0):
        raise DomainError("r must be nonnegative")
    z = np.clip(1.0 - (rr / (2.0 * R)) ** 2, 0.0, 1.0)
    out = np.where(rr >= 2.0 * R, 0.0, ball_volume(d, R) * betainc(0.5 * (d + 1), 0.5, z))
    return float(out) if np.ndim(r) == 0 else out


def structure_factor_heisenberg(D, kappa):
    """1 - exp(-kappa^2 / 4); the same for every complex dimension D."""
    k = np.asarray(kappa, dtype=float)
    out = -np.expm1(-0.25 * k * k)
    return float(out) if np.ndim(kappa) == 0 else out


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

def heisenberg_c(D=1):
    return RadialProfile(lambda r: -np.exp(-r * r), "real_space_c", Decay.gaussian(1.0))


def heisenberg_c_hat(D):
    """-pi^D exp(-kappa^2/4), the Fourier transform of the Heisenberg c(r)."""
    return RadialProfile(
        lambda k: -(math.pi**D) * np.exp(-0.25 * k * k), "generic", Decay.gaussian(2.0)
    )


def heisenberg_s(D=1):
    return RadialProfile(
        lambda k: structure_factor_heisenberg(D, k),
        "fourier_space_s",
        Decay.gaussian(2.0),
        complement=lambda k: np.exp(-0.25 * k * k),
    )


def poisson_s():
    return RadialProfile(
        lambda k: np.ones_like(k), "fourier_space_s", Decay.compact(0.0),
        complement=lambda k: np.zeros_like(k),
    )


def poisson_c():
    return RadialProfile(lambda r: np.zeros_like(r), "real_space_c", Decay.compact(0.0))


def intersection_volume_profile(d, R):
    """Fourier transform of the intersection volume as a profile in kappa."""
    return RadialProfile(
        lambda k: intersection_volume_ft(d, R, k), "generic", Decay.power(d + 1.0),
        oscillation=2.0 * R,
    )


# --------------------------------------------------------------------------
# integration helpers
# --------------------------------------------------------------------------

def _gauss_cutoff(scale):
    return max(12.0, scale * math.sqrt(-math.log(_GAUSS_TAIL)))


def _zero_breaks(nu, t, upper, cap=20000):
    """Zeros of J_nu(t u) in (0, upper), or a uniform grid when there are too many."""
    if t <= 0:
        return None
    n = int(upper * t / math.pi + 0.5 * abs(nu) + 2)
    if n > cap:
        return np.arange(math.pi / t, upper, math.pi / t)
    z = specfun.bessel_j_zeros(nu, n) / t
    return z[z < upper]


def _regulated(f, freqs, beta, q):
    """int_0^inf f for an algebraically decaying, possibly oscillatory f.

    f ~ u^{-beta} (times oscillating factors with the given angular
    frequencies).  Integrals of f exp(-(u/L)^2) for L = L0 2^j are
    extrapolated to L -> inf assuming an error expansion in powers of
    L^{-1/2} starting at min(beta - 1, 2); components that oscillate are
    damped like exp(-(omega L / 2)^2) and do not enter that expansion once
    L0 is several periods long.
    """
    freqs = [w for w in freqs if w > 0]
    w_max = max(freqs) if freqs else 1.0
    w_min = min(freqs) if freqs else 1.0
    lam0 = max(10.0, 4.0 / w_min) if freqs else 10.0
    lam0 = max(lam0, 20.0 / w_max) if freqs else lam0
    width = math.pi / w_max
    p0 = min(beta - 1.0, 2.0)
    exps = [p0 + 0.5 * j for j in range(_REG_LEVELS - 1)]
    vals = []
    mag = 0.0
    for j in range(_REG_LEVELS):
        L = lam0 * 2.0**j
        upper = _REG_SPAN * L
        pts = np.arange(width, upper, width)
        n_sub = max(q.max_subdivisions, 4 * pts.size)

        def g(u, L=L):
            return f(u) * np.exp(-((u / L) ** 2))

        v, _ = integrate(g, 0.0, upper, q.rel_tol, q.abs_tol * 1e-3, n_sub, points=pts)
        vals.append(v)
        if j == 0:
            # size of the integrand, the yardstick for a vanishing limit
            mag, _ = integrate(lambda u: np.abs(g(u)), 0.0, upper, 1e-6, q.abs_tol, n_sub,
                               points=pts)
    best = _richardson(vals, exps)
    prev = _richardson(vals[1:], exps[:-1])
    return best, abs(best - prev), mag


def _richardson(vals, exps):
    t = list(vals)
    for p in exps[: len(vals) - 1]:
        r = 2.0**p
        t = [(r * t[i + 1] - t[i]) / (r - 1.0) for i in range(len(t) - 1)]
    return t[-1]


def _check_extrapolated(value, err, scale, q, what):
    ref = max(abs(value), scale, q.abs_tol)
    if not np.isfinite(value) or err > q.extrapolation_tol * ref:
        raise ConvergenceError(f"{what}: extrapolated integral did not settle", err)


def bessel_square_integral(nu, R, weight, decay, q=QuadratureSpec(), oscillation=0.0):
    """int_0^inf J_nu(kappa R)^2 / kappa * weight(kappa) dkappa; returns (value, error)."""
    if decay is None:
        raise DomainError("an envelope (decay) is required for this integral")

    def f(k):
        z = k * R
        jb = specfun.bessel_j_over_power(nu, z)
        return jb * jb * np.power(z, 2 * nu) / np.where(k > 0, k, 1.0) * weight(k)

    if decay.kind == "compact" and decay.value == 0.0:
        return 0.0, 0.0
    if decay.kind in ("compact", "gaussian"):
        upper = decay.value if decay.kind == "compact" else _gauss_cutoff(decay.value)
        pts = _zero_breaks(nu, R, upper)
        v, e = integrate(f, 0.0, upper, q.rel_tol, q.abs_tol, q.max_subdivisions, points=pts)
        return v, e
    v, e, mag = _regulated(f, [2.0 * R, oscillation], decay.value + 2.0, q)
    _check_extrapolated(v, e, mag, q, "bessel_square_integral")
    return v, e


# --------------------------------------------------------------------------
# transforms
# --------------------------------------------------------------------------

def _hankel(d, profile, t, q):
    """int_0^inf u^{d-1} [J_nu(t u) / (t u)^nu] g(u) du with nu = (d-2)/2."""
    nu = 0.5 * (d - 2)
    decay = profile.decay
    if decay is None:
        raise DomainError("profile has no decay descriptor")

    def f(u):
        return u ** (d - 1) * specfun.bessel_j_over_power(nu, t * u) * profile(u)

    if decay.kind == "compact" and decay.value == 0.0:
        return 0.0, 0.0
    if decay.kind in ("compact", "gaussian"):
        upper = decay.value if decay.kind == "compact" else _gauss_cutoff(decay.value)
        pts = _zero_breaks(nu, t, upper)
        return integrate(f, 0.0, upper, q.rel_tol, q.abs_tol, q.max_subdivisions, points=pts)
    beta = decay.value - (d - 1) + (0.5 * (d - 1) if t > 0 else 0.0)
    w = profile.oscillation
    freqs = [t, w, abs(t - w), t + w]
    v, e, mag = _regulated(f, freqs, beta, q)
    _check_extrapolated(v, e, mag, q, "radial_fourier")
    return v, e


def radial_fourier(d, profile, kappa_or_r, direction="forward", q=QuadratureSpec(),
                   full_output=False):
    """Radial Fourier transform in R^d.

    forward:  f^(kappa) = (2 pi)^{d/2} int_0^inf r^{d-1} J_nu(kappa r)/(kappa r)^nu f(r) dr
    inverse:  f(r) = (2 pi)^{-d/2} int_0^inf kappa^{d-1} J_nu(kappa r)/(kappa r)^nu f^(kappa) dkappa

    with nu = (d-2)/2; the kernel is taken in its regular form so that
    kappa = 0 (or r = 0) needs no special casing.
    """
    if d < 1 or int(d) != d:
        raise DomainError("d must be a positive integer")
    if kappa_or_r < 0:
        raise DomainError("transform argument must be nonnegative")
    v, e = _hankel(int(d), profile, float(kappa_or_r), q)
    if direction == "forward":
        scale = (2.0 * math.pi) ** (0.5 * d)
    elif direction == "inverse":
        scale = (2.0 * math.pi) ** (-0.5 * d)
    else:
        raise DomainError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return (scale * v, scale * e) if full_output else scale * v


# --------------------------------------------------------------------------
# variances
# --------------------------------------------------------------------------

def variance_quadrature_fourier(dens, s_hat, R, q=QuadratureSpec()):
    """Number variance of B_R from a radial structure factor.

    Var = sigma rho R^d int_0^inf J_{d/2}(kappa R)^2 / kappa s(kappa) dkappa
    with sigma = 2 pi^{d/2} / Gamma(d/2).  With the default ``split_add1``
    strategy the integral is rewritten as 1/d - int J^2/kappa (1 - s), so a
    Poisson structure factor costs no quadrature at all; ``gaussian_cutoff``
    integrates s itself with the regulated extrapolation.
    """
    if R <= 0:
        raise DomainError("R must be positive")
    d = dens.d
    nu = 0.5 * d
    mean = dens.rho_tilde * ball_volume(d, R)
    if s_hat.decay is None:
        raise DomainError("structure factor needs a decay descriptor for 1 - s(kappa)")
    if q.tail_strategy == "split_add1":
        resid, err = bessel_square_integral(nu, R, s_hat.one_minus, s_hat.decay, q,
                                            s_hat.oscillation)
        # sigma rho R^d / d == rho vol(B_R) == mean
        variance = mean * (1.0 - d * resid)
        err_v = mean * d * err
    else:
        def f(k):
            z = k * R
            jb = specfun.bessel_j_over_power(nu, z)
            return jb * jb * np.power(z, 2 * nu) / np.where(k > 0, k, 1.0) * s_hat(k)

        val, err, mag = _regulated(f, [2.0 * R, s_hat.oscillation], 2.0, q)
        _check_extrapolated(val, err, mag, q, "variance_quadrature_fourier")
        variance = mean * d * val
        err_v = mean * d * err
    return VarianceReport.build(mean, variance, Route.QUADRATURE, err_v)


def variance_quadrature_real(dens, c, R, q=QuadratureSpec()):
    """Number variance of B_R from a radial total correlation function.

    Var = rho [vol(B_R) + sigma rho int_0^{2R} I(r) c(r) r^{d-1} dr]
    with I the intersection volume of two radius-R balls.
    """
    if R <= 0:
        raise DomainError("R must be positive")
    d = dens.d
    vol = ball_volume(d, R)
    mean = dens.rho_tilde * vol
    upper = 2.0 * R
    if c.decay is not None:
        if c.decay.kind == "compact":
            upper = min(upper, c.decay.value)
        elif c.decay.kind == "gaussian":
            upper = min(upper, _gauss_cutoff(c.decay.value))
    if upper == 0.0:
        return VarianceReport.build(mean, mean, Route.QUADRATURE, 0.0)

    def f(r):
        return intersection_volume_real(d, R, r) * c(r) * r ** (d - 1)

    val, err = integrate(f, 0.0, upper, q.rel_tol, q.abs_tol, q.max_subdivisions)
    sig = _sphere_area(d) * dens.rho_tilde
    variance = dens.rho_tilde * (vol + sig * val)
    return VarianceReport.build(mean, variance, Route.QUADRATURE, dens.rho_tilde * sig * err)


def variance_heisenberg_quadrature(D, R, q=QuadratureSpec(), space="fourier"):
    """Heisenberg ball variance through the generic engine."""
    dens = heisenberg_density(D)
    if space == "fourier":
        return variance_quadrature_fourier(dens, heisenberg_s(D), R, q)
    if space == "real":
        return variance_quadrature_real(dens, heisenberg_c(D), R, q)
    raise DomainError(f"space must be 'fourier' or 'real', got {space!r}")


def variance_poisson(d, R, rho_tilde=1.0, q=QuadratureSpec()):
    return variance_quadrature_fourier(DensityParams(rho_tilde, d), poisson_s(), R, q)


# --------------------------------------------------------------------------
# identities used for verification
# --------------------------------------------------------------------------

def a_n_quadrature(n, R, q=QuadratureSpec()):
    """A_n(R) = int_0^inf J_n(kappa R)^2 / kappa (1 - exp(-kappa^2/4)) dkappa."""
    damped, err = bessel_square_integral(
        float(n), R, lambda k: np.exp(-0.25 * k * k), Decay.gaussian(2.0), q
    )
    return 1.0 / (2.0 * n) - damped, err


def recurrence_check_An(D, R, q=QuadratureSpec()):
    """max_n |n A_n - (n-1) A_{n-1} - e^{-2R^2}/2 [I_{n-1} + I_n](2R^2)| over n = 1..D."""
    if D < 1 or R <= 0:
        raise DomainError("need D >= 1 and R > 0")
    x = 2.0 * R * R
    scaled = [specfun.bessel_i_scaled(n, x) for n in range(D + 1)]
    a_prev = 0.0
    worst = 0.0
    for n in range(1, D + 1):
        a_n, _ = a_n_quadrature(n, R, q)
        rhs = 0.5 * (scaled[n - 1] + scaled[n])
        worst = max(worst, abs(n * a_n - (n - 1) * a_prev - rhs))
        a_prev = a_n
    return worst


def a_split(D, R, q=QuadratureSpec()):
    """(A^(1) by extrapolated quadrature, A^(2) by quadrature, A^(2) from 2F2).

    A^(1) = int J_D(kappa R)^2 / kappa = 1/(2D) and
    A^(2) = int J_D(kappa R)^2 / kappa exp(-kappa^2/4)
          = (2R)^{2D} / (2^{2D+1} D^2 Gamma(D)) 2F2(D, D+1/2; D+1, 2D+1; -4R^2).
    """
    a1, _ = bessel_square_integral(float(D), R, np.ones_like, Decay.power(0.0), q)
    a2, _ = bessel_square_integral(
        float(D), R, lambda k: np.exp(-0.25 * k * k), Decay.gaussian(2.0), q
    )
    F = specfun.hyp2f2(D, D + 0.5, D + 1.0, 2.0 * D + 1.0, -4.0 * R * R,
                       specfun.Accuracy(rel_tol=1e-12))
    logc = 2 * D * math.log(2 * R) - (2 * D + 1) * math.log(2) - 2 * math.log(D) - gammaln(D)
    return a1, a2, math.exp(logc) * F
