"""Counting variables as sums of independent Bernoulli variables.

For a polydisk the restricted kernel is diagonal in the monomial basis with
eigenvalues prod_l p_{n_l}(R).  For a ball the same basis diagonalizes the
rotation-invariant restriction, each monomial of total degree k having
eigenvalue p_{k+D-1}(R) with multiplicity binom(k+D-1, D-1).  The count in
the window is then distributed as sum over eigenvalues of independent
Bernoulli(eigenvalue) variables, which gives exact moments, the exact
counting distribution and a cheap exact sampler.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from . import exact, specfun
from .errors import DomainError, ResourceGuardError, SelfCheckError
from .specfun import Accuracy

DEFAULT_TRUNC = Accuracy(rel_tol=1e-16, abs_tol=1e-16)
MAX_ENTRIES = 2_000_000
MAX_PMF_LENGTH = 1_000_000
BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class Window:
    kind: str  # "ball" or "polydisk"
    D: int
    R: float


@dataclass(frozen=True)
class BernoulliSpectrum:
    probs: np.ndarray
    mults: np.ndarray
    window: Window | None = None
    tail_bound: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        mults = np.asarray(self.mults, dtype=np.int64)
        if probs.shape != mults.shape:
            raise DomainError("probs and mults must have the same length")
        if np.any((probs < 0) | (probs > 1)):
            raise DomainError("probabilities must lie in [0, 1]")
        if np.any(mults < 1):
            raise DomainError("multiplicities must be positive")
        if probs.size > 1 and np.any(np.diff(probs) >= 0):
            raise DomainError("probabilities must be strictly decreasing")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "mults", mults)

    @classmethod
    def from_pairs(cls, pairs, window=None, tail_bound=0.0):
        """Build from (prob, multiplicity) pairs in any order, merging equal probs."""
        if not pairs:
            return cls(np.zeros(0), np.zeros(0, dtype=np.int64), window, tail_bound)
        p, m = zip(*pairs)
        probs, mults = _group(np.asarray(p, float), np.asarray(m, np.int64))
        return cls(probs, mults, window, tail_bound)

    @property
    def entries(self):
        return [(float(p), int(m)) for p, m in zip(self.probs, self.mults)]

    def __len__(self):
        return int(self.probs.size)


@dataclass(frozen=True)
class CountPMF:
    probs: np.ndarray
    n_max: int
    truncated_mass: float = 0.0

    def mean(self):
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def variance(self):
        k = np.arange(self.probs.size)
        m = self.mean()
        return float(np.dot((k - m) ** 2, self.probs))

    def pgf(self, z):
        return float(np.polynomial.polynomial.polyval(z, self.probs))


@dataclass(frozen=True)
class SampleStats:
    n_samples: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    seed: int
    variance_se: float = float("nan")
    fourth_central: float = float("nan")


def _group(probs, mults):
    keep = probs > 0
    probs, mults = probs[keep], mults[keep]
    if probs.size == 0:
        return probs, mults
    uniq, inv = np.unique(probs, return_inverse=True)
    counts = np.zeros(uniq.size, dtype=np.int64)
    np.add.at(counts, inv, mults)
    return uniq[::-1].copy(), counts[::-1].copy()


# --------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------

def pk(k, R):
    """p_k(R) = P(k+1, R^2): occupation probability of the k-th mode inside radius R."""
    if k < 0 or int(k) != k:
        raise DomainError("k must be a nonnegative integer")
    if R < 0:
        raise DomainError("R must be nonnegative")
    if R == 0:
        return 0.0
    return specfun.reg_lower_gamma(int(k) + 1, R * R)


def _floor(trunc):
    return trunc.abs_tol if trunc.abs_tol > 0 else 1e-16


def ball_spectrum(D, R, trunc=DEFAULT_TRUNC, max_entries=MAX_ENTRIES, self_check=True):
    """Eigenvalues (p_{k+D-1}(R), binom(k+D-1, D-1)) of the ball-restricted kernel.

    The mean identity sum mult * prob = R^{2D}/D! and agreement of the
    spectral variance with the Bessel closed form are checked on every call;
    a :class:`SelfCheckError` is raised rather than returning numbers that
    fail either.
    """
    if D < 1 or int(D) != D:
        raise DomainError("D must be a positive integer")
    if R <= 0:
        raise DomainError("R must be positive")
    D = int(D)
    x = R * R
    K = exact.spectrum_cutoff(R, D - 1, _floor(trunc))
    if K + 1 > max_entries:
        raise ResourceGuardError(f"ball spectrum needs {K + 1} entries (cap {max_entries})")
    tails = specfun.poisson_tail_array(x, K + D - 1)
    probs = tails[D - 1 :]
    mults = np.array([math.comb(k + D - 1, D - 1) for k in range(K + 1)], dtype=np.int64)
    last = K + D - 1
    tail = _tail_after(probs[-1], mults[-1], x, last)
    grouped = _group(probs, mults)
    spec = BernoulliSpectrum(grouped[0], grouped[1], Window("ball", D, float(R)), tail)
    if self_check:
        _check_ball(spec, D, R)
    return spec


def _tail_after(prob_last, mult_last, x, index_last):
    # consecutive-term ratio of mult * p beyond index_last is below x / (index_last + 2)
    r = x / (index_last + 2.0)
    if r >= 1.0:
        return math.inf
    return float(prob_last * mult_last * r / (1.0 - r))


def _check_ball(spec, D, R):
    mean, var = spectrum_moments(spec)
    target = exact.mean_ball(D, R)
    slack = spec.tail_bound + 1e-12 * (1.0 + target)
    if abs(mean - target) > slack:
        raise SelfCheckError(
            f"ball spectrum mean {mean!r} differs from R^2D/D! = {target!r} (D={D}, R={R})"
        )
    ref = exact.variance_ball_bessel(D, R)
    if abs(var - ref.variance) > 1e-9 * target + spec.tail_bound:
        raise SelfCheckError(
            f"ball spectrum variance {var!r} differs from Bessel value {ref.variance!r}"
        )


def polydisk_spectrum(D, R, trunc=DEFAULT_TRUNC, max_entries=MAX_ENTRIES):
    """Products prod_l p_{n_l}(R) over multi-indices n, grouped by value.

    Multi-indices are enumerated as sorted tuples so that permutations are
    counted through their multiplicity instead of being listed; tuples whose
    product falls below ``trunc.abs_tol`` are dropped.
    """
    if D < 1 or int(D) != D:
        raise DomainError("D must be a positive integer")
    if R < 0:
        raise DomainError("R must be nonnegative")
    D = int(D)
    floor = _floor(trunc)
    window = Window("polydisk", D, float(R))
    if R == 0:
        return BernoulliSpectrum.from_pairs([], window)
    x = R * R
    K = exact.spectrum_cutoff(R, 0, floor)
    p1 = specfun.poisson_tail_array(x, K)
    p1 = p1[p1 >= floor]
    if p1.size == 0:
        return BernoulliSpectrum.from_pairs([], window, tail_bound=x**D)

    # level-by-level extension of nondecreasing index tuples
    idx = np.arange(p1.size)
    prod = p1.copy()
    last = idx.copy()
    run = np.ones_like(idx)
    perms = np.ones(p1.size)
    for level in range(1, D):
        new_prod, new_last, new_run, new_perms = [], [], [], []
        for j in range(p1.size):
            sel = (last <= j) & (prod * p1[j] >= floor)
            if not sel.any():
                continue
            same = last[sel] == j
            r = np.where(same, run[sel] + 1, 1)
            new_prod.append(prod[sel] * p1[j])
            new_last.append(np.full(r.size, j))
            new_run.append(r)
            new_perms.append(perms[sel] * (level + 1) / r)
        prod = np.concatenate(new_prod)
        last = np.concatenate(new_last)
        run = np.concatenate(new_run)
        perms = np.concatenate(new_perms)
        if prod.size > max_entries:
            raise ResourceGuardError(
                f"polydisk enumeration exceeded {max_entries} index tuples (D={D}, R={R})"
            )
    mults = np.rint(perms).astype(np.int64)
    probs, mults = _group(prod, mults)
    s1, _, tail1 = exact.polydisk_sums(R, trunc)
    retained = math.fsum(probs * mults)
    tail = max(0.0, (s1 + tail1) ** D - retained) + 4 * specfun.EPS * s1**D
    return BernoulliSpectrum(probs, mults, window, tail)


def spectrum_moments(s):
    """(mean, variance) of the Bernoulli sum; ``s.tail_bound`` bounds the omitted part."""
    if len(s) == 0:
        return 0.0, 0.0
    m = s.mults.astype(float)
    mean = math.fsum(m * s.probs)
    var = math.fsum(m * s.probs * (1.0 - s.probs))
    return mean, var


def spectrum_cumulants(s):
    """First four cumulants of the Bernoulli sum."""
    p = s.probs
    m = s.mults.astype(float)
    q = p * (1.0 - p)
    return (
        math.fsum(m * p),
        math.fsum(m * q),
        math.fsum(m * q * (1.0 - 2.0 * p)),
        math.fsum(m * q * (1.0 - 6.0 * q)),
    )


def predicted_shape(s):
    """(skewness, excess kurtosis) implied by the exact cumulants."""
    _, k2, k3, k4 = spectrum_cumulants(s)
    if k2 == 0:
        return 0.0, 0.0
    return k3 / k2**1.5, k4 / k2**2


# --------------------------------------------------------------------------
# exact distribution
# --------------------------------------------------------------------------

def counting_pmf(s, n_max=None, max_length=MAX_PMF_LENGTH):
    """Exact distribution of the count by convolving Binomial(mult, prob) factors.

    Mass above ``n_max`` is discarded and accounted for in
    ``truncated_mass``; by default ``n_max`` is the total multiplicity so
    nothing is discarded.
    """
    total = int(s.mults.sum()) if len(s) else 0
    if n_max is None:
        n_max = total
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    if n_max + 1 > max_length:
        raise ResourceGuardError(f"pmf length {n_max + 1} exceeds cap {max_length}")
    pmf = np.ones(1)
    dropped = 0.0
    for p, m in zip(s.probs, s.mults):
        factor = binom.pmf(np.arange(m + 1), m, p)
        pmf = np.convolve(pmf, factor)
        if pmf.size > n_max + 1:
            dropped += float(pmf[n_max + 1 :].sum())
            pmf = pmf[: n_max + 1]
    return CountPMF(pmf, n_max, dropped)


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def _stream(seed, entry, block):
    key = (seed & 0xFFFFFFFFFFFFFFFF) | (((entry & 0xFFFFFFFF) << 32 | (block & 0xFFFFFFFF)) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_block(s, seed, block, size):
    counts = np.zeros(size, dtype=np.int64)
    for i, (p, m) in enumerate(zip(s.probs, s.mults)):
        if p == 1.0:
            counts += m
            continue
        counts += _stream(seed, i, block).binomial(int(m), float(p), size=size)
    return counts


def sample_count_array(s, n_samples, seed, workers=1, block_size=BLOCK_SIZE):
    """Raw sampled counts.  Each (entry, block) pair owns a Philox stream keyed
    by (seed, entry, block), so the output does not depend on ``workers``."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    n_blocks = -(-n_samples // block_size)
    sizes = [min(block_size, n_samples - b * block_size) for b in range(n_blocks)]
    if workers <= 1:
        parts = [_sample_block(s, seed, b, sz) for b, sz in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _sample_block(s, seed, *a), enumerate(sizes)))
    return np.concatenate(parts)


def sample_counts(s, n_samples, seed, workers=1, block_size=BLOCK_SIZE):
    """Monte Carlo moment statistics of the count.

    ``variance_se`` is the large-sample standard error of the sample
    variance, sqrt((m4 - m2^2) / n), from the empirical central moments.
    """
    counts = sample_count_array(s, n_samples, seed, workers, block_size)
    x = counts.astype(float)
    n = x.size
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev**2))
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    var = m2 * n / (n - 1) if n > 1 else 0.0
    if m2 > 0:
        skew = m3 / m2**1.5
        kurt = m4 / m2**2 - 3.0
    else:
        skew = kurt = 0.0
    se = math.sqrt(max(m4 - m2 * m2, 0.0) / n)
    return SampleStats(n, mean, var, skew, kurt, int(seed), se, m4)
