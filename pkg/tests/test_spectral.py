import math

import mpmath as mp
import numpy as np
import pytest

from heisenvar import exact as E
from heisenvar import spectral as SP
from heisenvar.errors import DomainError, ResourceGuardError


def test_pk_values():
    assert SP.pk(0, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    assert SP.pk(5, 0.0) == 0.0
    # P(Pois(4) >= 4) by direct summation
    ref = 1 - math.fsum(math.exp(-4) * 4**j / math.factorial(j) for j in range(4))
    assert SP.pk(3, 2.0) == pytest.approx(ref, abs=1e-13)


def test_pk_monotone():
    for k in range(10):
        assert SP.pk(k + 1, 1.7) <= SP.pk(k, 1.7)
        assert SP.pk(k, 1.8) >= SP.pk(k, 1.7)


def test_polydisk_spectrum_d1():
    s = SP.polydisk_spectrum(1, 1.0)
    assert s.probs[:3] == pytest.approx([0.6321206, 0.2642411, 0.0803014], abs=1e-7)
    assert np.all(s.mults == 1)
    # the ball keeps more of the negligible tail; the shared part is identical
    b = SP.ball_spectrum(1, 1.0)
    n = len(s)
    assert np.array_equal(s.probs, b.probs[:n])
    assert b.probs[n:].sum() <= 1e-15


def test_polydisk_spectrum_d2_mean():
    s = SP.polydisk_spectrum(2, 1.0)
    m, _ = SP.spectrum_moments(s)
    assert abs(m - 1.0) <= s.tail_bound + 1e-14


def test_polydisk_spectrum_tiny_window_is_empty():
    s = SP.polydisk_spectrum(1, 1e-9)
    assert len(s) == 0
    assert SP.spectrum_moments(s) == (0.0, 0.0)


def test_polydisk_resource_guard():
    with pytest.raises(ResourceGuardError):
        SP.polydisk_spectrum(4, 6.0, max_entries=1000)


def test_ball_spectrum_d2():
    s = SP.ball_spectrum(2, 1.5)
    m, v = SP.spectrum_moments(s)
    assert m == pytest.approx(1.5**4 / 2, abs=1e-12)
    assert v == pytest.approx(E.variance_ball_bessel(E.HeisenbergParams(2, 1.5)).variance,
                              rel=1e-10)


def test_ball_spectrum_multiplicities():
    s = SP.ball_spectrum(3, 2.0)
    assert list(s.mults[:4]) == [math.comb(k + 2, 2) for k in range(4)]
    assert np.all(np.diff(s.probs) < 0)
    assert s.tail_bound < 1e-12


@pytest.mark.parametrize("D", [1, 2, 3, 4, 5])
def test_mean_identity_grid(D):
    for R in (0.5, 1.0, 2.0, 5.0, 10.0):
        m, v = SP.spectrum_moments(SP.ball_spectrum(D, R))
        ref = R ** (2 * D) / math.factorial(D)
        assert abs(m - ref) <= 1e-10 * (1 + ref)
        bes = E.variance_ball_bessel(E.HeisenbergParams(D, R)).variance
        assert v == pytest.approx(bes, rel=1e-8)


def test_ball_spectrum_d1_r2():
    m, v = SP.spectrum_moments(SP.ball_spectrum(1, 2.0))
    ref = float(mp.exp(-8) * 4 * (mp.besseli(0, 8) + mp.besseli(1, 8)))
    assert m == pytest.approx(4.0, rel=1e-14)
    assert v == pytest.approx(ref, rel=1e-10)


def test_ball_spectrum_rejects_bad_input():
    with pytest.raises(DomainError):
        SP.ball_spectrum(0, 1.0)
    with pytest.raises(DomainError):
        SP.ball_spectrum(1, -1.0)


def test_spectrum_moments_single_entry():
    s = SP.BernoulliSpectrum.from_pairs([(0.5, 4)])
    assert SP.spectrum_moments(s) == (2.0, 1.0)


def test_spectrum_must_decrease():
    with pytest.raises(DomainError):
        SP.BernoulliSpectrum(np.array([0.2, 0.5]), np.array([1, 1]))


def test_counting_pmf_single():
    s = SP.BernoulliSpectrum.from_pairs([(0.3, 1)])
    pmf = SP.counting_pmf(s)
    assert pmf.probs == pytest.approx([0.7, 0.3])


def test_counting_pmf_moments_and_pgf():
    s = SP.polydisk_spectrum(2, 1.2)
    pmf = SP.counting_pmf(s)
    m, v = SP.spectrum_moments(s)
    assert abs(pmf.probs.sum() - 1) < 1e-12
    assert pmf.mean() == pytest.approx(m, abs=1e-12)
    assert pmf.variance() == pytest.approx(v, abs=1e-12)
    for z in (0.3, 0.7, 1.0):
        direct = math.prod((1 - p + p * z) ** int(k) for p, k in zip(s.probs, s.mults))
        assert pmf.pgf(z) == pytest.approx(direct, abs=1e-12)


def test_counting_pmf_zero_count_against_sampling():
    s = SP.ball_spectrum(1, 1.0)
    pmf = SP.counting_pmf(s)
    p0 = math.prod(1 - p for p in s.probs)
    assert pmf.probs[0] == pytest.approx(p0, rel=1e-12)
    counts = SP.sample_count_array(s, 10**7, seed=11, workers=4)
    freq = np.mean(counts == 0)
    se = math.sqrt(p0 * (1 - p0) / counts.size)
    assert abs(freq - p0) < 4 * se


def test_counting_pmf_cap():
    s = SP.ball_spectrum(2, 3.0)
    pmf = SP.counting_pmf(s, n_max=10)
    assert pmf.truncated_mass > 0
    with pytest.raises(ResourceGuardError):
        SP.counting_pmf(s, n_max=10, max_length=5)


def test_sampling_degenerate():
    s = SP.BernoulliSpectrum.from_pairs([(1.0, 5)])
    st = SP.sample_counts(s, 1000, seed=1)
    assert st.mean == 5 and st.variance == 0


def test_sampling_reproducible_and_worker_independent():
    s = SP.ball_spectrum(2, 2.0)
    a = SP.sample_count_array(s, 200_000, seed=42, workers=1)
    b = SP.sample_count_array(s, 200_000, seed=42, workers=4)
    c = SP.sample_count_array(s, 200_000, seed=43, workers=1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert SP.sample_counts(s, 50_000, 7) == SP.sample_counts(s, 50_000, 7)


def test_sampling_d2_r10_is_nearly_normal():
    s = SP.ball_spectrum(2, 10.0)
    st = SP.sample_counts(s, 10**6, seed=2024, workers=4)
    assert abs(st.skewness) <= 0.02
    assert abs(st.excess_kurtosis) <= 0.05


def test_predicted_shape_against_pmf():
    s = SP.ball_spectrum(1, 1.5)
    pmf = SP.counting_pmf(s)
    k = np.arange(pmf.probs.size)
    mu = float(np.sum(k * pmf.probs))
    var = float(np.sum((k - mu) ** 2 * pmf.probs))
    skew = float(np.sum((k - mu) ** 3 * pmf.probs)) / var**1.5
    kurt = float(np.sum((k - mu) ** 4 * pmf.probs)) / var**2 - 3
    ps, pk = SP.predicted_shape(s)
    assert ps == pytest.approx(skew, rel=1e-9)
    assert pk == pytest.approx(kurt, rel=1e-9)
