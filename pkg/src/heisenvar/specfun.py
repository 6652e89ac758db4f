"""Special functions with controlled accuracy.

Real-argument Bessel J_nu, exponentially scaled modified Bessel I_n, the
regularized lower incomplete gamma function for integer shape, the 2F2
hypergeometric series and the product coefficients alpha_k(nu) that appear
in the Hankel-type asymptotic expansions.

All functions are pure.  Array arguments are accepted by :func:`bessel_j`
because the quadrature code evaluates it on whole panels at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CancellationGuardError, ConvergenceError, DomainError

EPS = np.finfo(float).eps

# Crossover of the scaled-I series and its large-argument expansion.
I_CROSSOVER = 30.0
# Bessel-J power series is used below this argument; above it, and below the
# asymptotic crossover, Miller's backward recurrence is used instead.
J_SERIES_MAX = 8.0
HYP2F2_X_MAX = 80.0


@dataclass(frozen=True)
class Accuracy:
    rel_tol: float = 2.0**-53
    abs_tol: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.abs_tol < 0.0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")

    def small(self, term, partial):
        return abs(term) <= self.abs_tol + self.rel_tol * abs(partial)


DEFAULT_ACCURACY = Accuracy()


def j_crossover(nu):
    """Argument above which :func:`bessel_j` uses the asymptotic expansion."""
    return max(20.0, 2.0 * nu * nu)


# --------------------------------------------------------------------------
# alpha_k(nu)
# --------------------------------------------------------------------------

def alpha_coeff(k, nu):
    """prod_{l=1}^{k} (4 nu^2 - (2l-1)^2), with alpha_0 = 1.

    Exact integer arithmetic is used whenever 4 nu^2 is an integer, so the
    value is only rounded once, on return.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    four_nu2 = 4.0 * nu * nu
    if float(four_nu2).is_integer():
        m = int(four_nu2)
        out = 1
        for ell in range(1, k + 1):
            out *= m - (2 * ell - 1) ** 2
        return float(out)
    out = 1.0
    for ell in range(1, k + 1):
        out *= four_nu2 - (2 * ell - 1) ** 2
    return out


def alpha_coeff_int(k, n):
    """Integer-exact alpha_k(n) for integer order n (no float conversion)."""
    out = 1
    for ell in range(1, k + 1):
        out *= 4 * n * n - (2 * ell - 1) ** 2
    return out


def _hankel_terms(nu, x):
    """Terms alpha_k(nu) / (k! 8^k x^k), optimally truncated.

    Returns the retained terms and the magnitude of the first omitted term.
    ``x`` may be an array; truncation is then decided per element and
    omitted terms are zeroed.
    """
    x = np.asarray(x, dtype=float)
    four_nu2 = 4.0 * nu * nu
    term = np.ones_like(x)
    terms = [term.copy()]
    active = np.ones(x.shape, dtype=bool)
    omitted = np.zeros_like(x)
    for k in range(1, 200):
        nxt = term * (four_nu2 - (2 * k - 1) ** 2) / (8.0 * k * x)
        growing = np.abs(nxt) >= np.abs(term)
        negligible = np.abs(nxt) <= EPS * 1e-3
        stop = active & (growing | negligible)
        omitted = np.where(stop, np.abs(nxt), omitted)
        active &= ~stop
        term = np.where(active, nxt, 0.0)
        if not active.any():
            break
        terms.append(term.copy())
    else:
        omitted = np.where(active, np.abs(term), omitted)
    return terms, omitted


# --------------------------------------------------------------------------
# Bessel J
# --------------------------------------------------------------------------

def _j_series(nu, x, acc):
    x = np.asarray(x, dtype=float)
    h = 0.5 * x
    q = -h * h
    with np.errstate(divide="ignore"):
        lead = np.where(
            x > 0, np.exp(nu * np.log(np.where(x > 0, h, 1.0)) - math.lgamma(nu + 1.0)), 0.0
        )
    if nu == 0.0:
        lead = np.ones_like(x)
    term = np.ones_like(x)
    total = np.ones_like(x)
    quiet = np.zeros(x.shape, dtype=int)
    for n in range(1, 400):
        term = term * q / (n * (nu + n))
        total = total + term
        quiet = np.where(np.abs(term) <= acc.abs_tol + acc.rel_tol * np.abs(total), quiet + 1, 0)
        if np.all(quiet >= 3):
            break
    else:
        raise ConvergenceError("J power series did not converge", float(np.max(np.abs(term))))
    return lead * total


def _j_miller(nu, x):
    """Backward recurrence normalized by the Neumann-type sum

    (x/2)^mu = sum_k (mu + 2k) Gamma(mu + k) / k! J_{mu+2k}(x),

    which reduces to J_0 + 2 sum J_{2k} = 1 for mu = 0.
    """
    x = np.asarray(x, dtype=float)
    if nu < 0.0:
        mu, n_target = nu + 1.0, -1
    else:
        mu = nu - math.floor(nu)
        n_target = int(round(nu - mu))
    xmax = float(np.max(x))
    top = int(max(n_target, xmax) + 40 + 12.0 * math.sqrt(max(n_target, xmax)))
    top += top % 2
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-30)
    kept = np.zeros_like(x)
    norm = np.zeros_like(x)
    # coefficient (mu + 2k) Gamma(mu + k) / k! for even indices 2k
    if mu == 0.0:
        def coef(m):
            return 1.0 if m == 0 else 2.0
    else:
        half = top // 2
        gk = [math.gamma(mu)]
        for k in range(half):
            gk.append(gk[-1] * (mu + k) / (k + 1))

        def coef(m):
            k = m // 2
            return (mu + 2 * k) * gk[k]

    for m in range(top, -1, -1):
        # f_cur holds f_{mu+m}, f_next holds f_{mu+m+1}
        if m == n_target:
            kept = f_cur.copy()
        if m % 2 == 0:
            norm = norm + coef(m) * f_cur
        if m == 0:
            break
        f_prev = (2.0 * (mu + m) / x) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > 1e200
        if big.any():
            scale = np.where(big, 1e-200, 1.0)
            f_cur, f_next, norm, kept = f_cur * scale, f_next * scale, norm * scale, kept * scale
    if n_target == -1:
        kept = (2.0 * mu / x) * f_cur - f_next
    target = 1.0 if mu == 0.0 else np.power(0.5 * x, mu)
    return kept * target / norm


def _j_asymptotic(nu, x):
    x = np.asarray(x, dtype=float)
    terms, omitted = _hankel_terms(nu, x)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for k, t in enumerate(terms):
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * t
        else:
            q += sign * t
    phase = (2.0 * nu + 1.0) * math.pi / 4.0
    cphi, sphi = math.cos(phase), math.sin(phase)
    cx, sx = np.cos(x), np.sin(x)
    cos_w = cx * cphi + sx * sphi
    sin_w = sx * cphi - cx * sphi
    amp = np.sqrt(2.0 / (math.pi * x))
    return amp * (cos_w * p - sin_w * q), amp * omitted


def bessel_j(nu, x, acc=DEFAULT_ACCURACY):
    """Bessel function of the first kind J_nu(x) for real nu > -1, x >= 0.

    Small arguments use the power series, large ones the two-sum Hankel
    expansion truncated at its smallest term; the band in between is covered
    by Miller's backward recurrence, which is stable there while the power
    series is not.  ``x`` may be a scalar or an array.
    """
    if nu <= -1.0:
        raise DomainError(f"order must exceed -1, got {nu}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("bessel_j requires x >= 0")
    out = np.empty_like(arr)
    flat = arr.reshape(-1)
    res = out.reshape(-1)
    x_star = j_crossover(nu)
    small = flat <= J_SERIES_MAX
    large = flat >= x_star
    mid = ~small & ~large
    if small.any():
        res[small] = _j_series(nu, flat[small], acc)
    if mid.any():
        res[mid] = _j_miller(nu, flat[mid])
    if large.any():
        res[large], _ = _j_asymptotic(nu, flat[large])
    if nu < 0.0:
        # (x/2)^nu blows up at the origin for negative non-integer order
        res[flat == 0.0] = math.inf
    if np.ndim(x) == 0:
        return float(out)
    return out


def bessel_j_over_power(nu, z):
    """J_nu(z) / z^nu, regular at z = 0 where it equals 1 / (2^nu Gamma(nu+1))."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    zero = z == 0.0
    out[zero] = 1.0 / (2.0**nu * math.gamma(nu + 1.0))
    nz = ~zero
    if nz.any():
        out[nz] = bessel_j(nu, z[nz]) / np.power(z[nz], nu)
    return out


def bessel_j_zeros(nu, count, acc=DEFAULT_ACCURACY):
    """First ``count`` positive zeros of J_nu.

    McMahon's expansion supplies the starting points for Newton's method;
    every root is then confirmed by a sign change, falling back to a
    bracketing scan if the guesses went astray (small index, large order).
    """
    if count <= 0:
        return np.zeros(0)
    mu = 4.0 * nu * nu
    zeros = []
    for m in range(1, count + 1):
        beta = (m + 0.5 * nu - 0.25) * math.pi
        b8 = 8.0 * beta
        guess = beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8**3)
        zeros.append(_newton_zero(nu, max(guess, 1e-3)))
    zeros = np.array(zeros)
    if _zeros_ok(nu, zeros):
        return zeros
    return _scan_zeros(nu, count)


def _j_prime(nu, x):
    return (nu / x) * bessel_j(nu, x) - bessel_j(nu + 1.0, x)


def _newton_zero(nu, x):
    for _ in range(50):
        f = bessel_j(nu, x)
        step = f / _j_prime(nu, x)
        x_new = x - step
        if x_new <= 0:
            x_new = 0.5 * x
        if abs(x_new - x) <= 4 * EPS * x:
            return x_new
        x = x_new
    return x


def _zeros_ok(nu, zeros):
    if np.any(~np.isfinite(zeros)) or np.any(zeros <= 0):
        return False
    if len(zeros) > 1 and np.any(np.diff(zeros) < 2.0):
        return False
    if zeros[0] < max(nu, 0.0):
        return False
    for z in zeros:
        d = 1e-6 * z
        if bessel_j(nu, z - d) * bessel_j(nu, z + d) > 0:
            return False
    # nothing skipped before the first zero
    grid = np.linspace(1e-9, zeros[0] - 1e-6 * zeros[0], 64)
    vals = bessel_j(nu, grid)
    return not np.any(vals[:-1] * vals[1:] < 0)


def _scan_zeros(nu, count):
    from scipy.optimize import brentq

    out = []
    step = 0.25
    a = 1e-9
    fa = bessel_j(nu, a)
    while len(out) < count:
        b = a + step
        fb = bessel_j(nu, b)
        if fa * fb < 0:
            out.append(brentq(lambda t: bessel_j(nu, t), a, b, xtol=1e-15, rtol=4 * EPS))
        a, fa = b, fb
    return np.array(out)


# --------------------------------------------------------------------------
# scaled modified Bessel I
# --------------------------------------------------------------------------

def _i_scaled_series(n, x, acc):
    lead = math.exp(n * math.log(0.5 * x) - x - math.lgamma(n + 1.0))
    q = 0.25 * x * x
    term = 1.0
    terms = [1.0]
    running = 1.0
    quiet = 0
    for k in range(1, 100000):
        term *= q / (k * (n + k))
        terms.append(term)
        running += term
        # positive terms: stop only once past the peak of the series
        if k * k > q and acc.small(term, running):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    else:
        raise ConvergenceError("scaled-I series did not converge", term)
    total = math.fsum(terms)
    return lead * total, lead * total * 4 * EPS * math.sqrt(len(terms))


def _i_scaled_miller(n, x):
    """e^{-x} I_n(x) by backward recurrence normalized with I_0 + 2 sum I_k = e^x."""
    top = int(n + 40 + 12.0 * math.sqrt(x) + math.sqrt(40.0 * max(n, x)))
    f_next, f_cur = 0.0, 1e-30
    kept = 0.0
    norm = 0.0
    for k in range(top, 0, -1):
        if k == n:
            kept = f_cur
        norm += 2.0 * f_cur
        f_prev = (2.0 * k / x) * f_cur + f_next
        f_next, f_cur = f_cur, f_prev
        if f_cur > 1e200:
            f_cur *= 1e-200
            f_next *= 1e-200
            kept *= 1e-200
            norm *= 1e-200
    if n == 0:
        kept = f_cur
    norm += f_cur
    return kept / norm


def bessel_i_scaled(n, x, acc=DEFAULT_ACCURACY, full_output=False):
    """e^{-x} I_n(x) for integer n >= 0 and x >= 0, free of overflow.

    Below x = 30 the positive-term power series is summed with e^{-x} folded
    into its prefactor; above, the large-argument expansion of I_n with the
    exponential cancelled analytically, truncated at its smallest term.  When
    that truncation is not accurate enough (order large compared with the
    argument) the backward recurrence takes over.

    With ``full_output`` the pair ``(value, error_estimate)`` is returned.
    """
    if x < 0 or math.isnan(x):
        raise DomainError("bessel_i_scaled requires x >= 0")
    if n < 0 or int(n) != n:
        raise DomainError("order must be a nonnegative integer")
    n = int(n)
    if x == 0.0:
        val, err = (1.0 if n == 0 else 0.0), 0.0
    elif x < I_CROSSOVER:
        val, err = _i_scaled_series(n, x, acc)
    else:
        val, err = _i_scaled_asymptotic(n, x)
        if err > 1e-15 * val:
            val = _i_scaled_miller(n, x)
            err = 8 * EPS * val * math.sqrt(n + x ** 0.5)
    return (val, err) if full_output else val


def _i_scaled_asymptotic(n, x):
    four_n2 = 4.0 * n * n
    term = 1.0
    total = 1.0
    omitted = 0.0
    for k in range(1, 400):
        nxt = -term * (four_n2 - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(nxt) >= abs(term) or nxt == 0.0:
            omitted = abs(nxt)
            break
        total += nxt
        term = nxt
        if abs(term) <= EPS * 1e-3 * abs(total):
            omitted = abs(term)
            break
    pref = 1.0 / math.sqrt(2.0 * math.pi * x)
    return pref * total, pref * (omitted + 2 * EPS * abs(total))


# --------------------------------------------------------------------------
# regularized lower incomplete gamma, integer shape
# --------------------------------------------------------------------------

def _log_poisson(j, x):
    return j * math.log(x) - x - math.lgamma(j + 1.0)


def reg_lower_gamma(shape, x, acc=DEFAULT_ACCURACY):
    """P(shape, x) = gamma(shape, x) / Gamma(shape) for integer shape >= 1.

    Equal to the Poisson upper tail P(Pois(x) >= shape).  When x < shape the
    tail is summed upward from j = shape; otherwise the complementary finite
    sum over j < shape is summed downward and subtracted from one, so that
    in neither case do two nearly equal quantities get subtracted.
    """
    if x < 0 or math.isnan(x):
        raise DomainError("reg_lower_gamma requires x >= 0")
    if shape < 1 or int(shape) != shape:
        raise DomainError("shape must be a positive integer")
    s = int(shape)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s:
        term = math.exp(_log_poisson(s, x))
        terms = [term]
        quiet = 0
        j = s
        while quiet < 3:
            j += 1
            term *= x / j
            terms.append(term)
            quiet = quiet + 1 if acc.small(term, terms[0]) else 0
        return min(1.0, math.fsum(terms))
    term = math.exp(_log_poisson(s - 1, x))
    terms = [term]
    quiet = 0
    for j in range(s - 1, 0, -1):
        term *= j / x
        terms.append(term)
        if acc.small(term, terms[0]):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    return max(0.0, 1.0 - math.fsum(terms))


# --------------------------------------------------------------------------
# 2F2 by exact fixed-point summation
# --------------------------------------------------------------------------

def _ratio_ints(v):
    return float(v).as_integer_ratio()


def _hyp2f2_peak(a1, a2, b1, b2, x):
    """log2 of the largest term magnitude, from a cheap float pass in log space."""
    log_t, best, n = 0.0, 0.0, 0
    while n < 100000:
        r = abs((a1 + n) * (a2 + n) * x / ((b1 + n) * (b2 + n) * (n + 1.0)))
        if r == 0.0:
            break
        log_t += math.log2(r)
        best = max(best, log_t)
        n += 1
        if r < 1.0 and n > abs(x) + abs(a1) + abs(a2):
            break
    return best


def hyp2f2(a1, a2, b1, b2, x, acc=DEFAULT_ACCURACY, full_output=False):
    """Generalized hypergeometric series 2F2(a1, a2; b1, b2; x).

    Every double is an exact dyadic rational, so the term recurrence is run
    in integer fixed point with a scale of 2^P, P chosen to cover the
    largest term plus 64 guard bits.  Cancellation in the alternating series
    for negative x then costs nothing beyond the (logged) size of the
    largest term.  The error estimate counts one unit of rounding per
    division, magnified by the largest term, plus the final rounding to
    double.  A :class:`CancellationGuardError` is raised when that estimate
    exceeds ``acc`` or when x < -80.
    """
    for b in (b1, b2):
        if b <= 0 and float(b).is_integer():
            raise DomainError("lower parameters must not be nonpositive integers")
    if x < -HYP2F2_X_MAX:
        raise CancellationGuardError(
            f"2F2 argument {x} beyond the negative-argument guard -{HYP2F2_X_MAX:g}; "
            "use the Bessel form instead"
        )
    (p1, q1), (p2, q2) = _ratio_ints(a1), _ratio_ints(a2)
    (r1, s1), (r2, s2) = _ratio_ints(b1), _ratio_ints(b2)
    xp, xq = _ratio_ints(x)
    peak = _hyp2f2_peak(a1, a2, b1, b2, x)
    P = int(math.ceil(peak)) + 64 + 20
    one = 1 << P
    term, total = one, one
    biggest = one
    quiet = 0
    n = 0
    while True:
        num = (p1 + n * q1) * (p2 + n * q2) * xp * s1 * s2
        den = q1 * q2 * xq * (r1 + n * s1) * (r2 + n * s2) * (n + 1)
        term = (term * num + den // 2) // den
        n += 1
        total += term
        biggest = max(biggest, abs(term))
        past_peak = n > abs(x) + abs(a1) + abs(a2)
        if term == 0 or (past_peak and abs(term) <= abs(total) >> 60):
            quiet += 1
            if quiet >= 3 or term == 0:
                break
        else:
            quiet = 0
        if n > 100000:
            raise ConvergenceError("2F2 series did not converge", abs(term) / one)
    value = total / one
    # one rounding unit per step, amplified by at most biggest / 1 along the recurrence
    err = math.ldexp(float(n + 1) * max(biggest / one, 1.0), -P) * 4 + abs(term) / one
    err += EPS * abs(value)
    if value == 0.0 or err > acc.abs_tol + max(acc.rel_tol, 1e-15) * abs(value):
        raise CancellationGuardError(
            f"2F2 cancellation too severe at x={x}: estimated error {err:.3g} "
            f"for value {value:.6g}",
            estimate=err,
        )
    return (value, err) if full_output else value


def poisson_tail_array(x, kmax):
    """P(k + 1, x) = P(Pois(x) > k) for k = 0..kmax, as an array.

    Vectorized counterpart of :func:`reg_lower_gamma`: each entry is taken
    from the upper-tail cumulative sum when k + 1 > x and from one minus the
    lower cumulative sum otherwise.
    """
    if x < 0 or math.isnan(x):
        raise DomainError("poisson_tail_array requires x >= 0")
    k = np.arange(kmax + 1)
    if x == 0.0:
        return np.zeros(kmax + 1)
    end = int(max(kmax + 2, x + 40.0 * math.sqrt(x) + 60))
    j = np.arange(end + 1, dtype=float)
    from scipy.special import gammaln

    log_pmf = j * math.log(x) - x - gammaln(j + 1.0)
    pmf = np.exp(log_pmf)
    cdf = np.cumsum(pmf)
    upper = np.cumsum(pmf[::-1])[::-1]  # upper[j] = P(N >= j)
    tail = upper[k + 1]
    lower = 1.0 - cdf[k]
    out = np.where(k + 1 > x, tail, lower)
    return np.clip(out, 0.0, 1.0)
