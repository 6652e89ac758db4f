import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenvar import specfun as S
from heisenvar.errors import CancellationGuardError, DomainError

mp.mp.dps = 40


def test_bessel_j_small_cases():
    assert abs(S.bessel_j(0.5, math.pi)) < 1e-12
    assert S.bessel_j(0, 0.0) == 1.0
    assert S.bessel_j(3, 0.0) == 0.0
    assert S.bessel_j(-0.5, 0.0) == math.inf


def test_bessel_j_series_oracle():
    # 200 terms of the power series in 40-digit arithmetic
    x = mp.mpf(5)
    ref = mp.fsum((-1) ** k * (x / 2) ** (2 * k + 1) / (mp.factorial(k) * mp.factorial(k + 1))
                  for k in range(200))
    assert abs(S.bessel_j(1, 5.0) - float(ref)) < 1e-12


@pytest.mark.parametrize("nu", [0, 0.5, 1, 1.5, 2, 5, 10, -0.5, 0.3])
def test_bessel_j_against_mpmath(nu):
    xs = np.concatenate([np.linspace(0, 30, 61), [47.3, 99.0, 250.5, 1234.5]])
    if nu < 0:
        xs = xs[1:]
    got = S.bessel_j(nu, xs)
    ref = np.array([float(mp.besselj(nu, x)) for x in xs])
    scale = np.maximum(np.abs(ref), 1 / np.sqrt(np.maximum(xs, 1)))
    assert np.max(np.abs(got - ref) / scale) < 1e-13


@pytest.mark.parametrize("nu", [0, 0.5, 1, 2, 5, 10])
def test_bessel_j_branches_agree_at_crossover(nu):
    xs = S.j_crossover(nu) * np.linspace(0.9, 1.1, 20)
    middle = S._j_miller(nu, xs)
    asym, _ = S._j_asymptotic(nu, xs)
    assert np.max(np.abs(middle - asym)) < 10 * 2.0**-53 * 4


def test_bessel_j_three_term_recurrence():
    xs = np.geomspace(0.1, 100, 50)
    for nu in range(1, 9):
        lhs = S.bessel_j(nu - 1, xs) + S.bessel_j(nu + 1, xs)
        rhs = 2 * nu / xs * S.bessel_j(nu, xs)
        scale = np.maximum(np.abs(rhs), np.abs(S.bessel_j(nu - 1, xs)))
        assert np.max(np.abs(lhs - rhs) / scale) < 1e-10


def test_bessel_j_domain():
    with pytest.raises(DomainError):
        S.bessel_j(-1.0, 1.0)
    with pytest.raises(DomainError):
        S.bessel_j(0, -1.0)


def test_bessel_j_over_power_is_regular():
    assert S.bessel_j_over_power(1.0, 0.0) == pytest.approx(0.5, rel=1e-15)
    assert S.bessel_j_over_power(2.0, 1e-9) == pytest.approx(1 / 8, rel=1e-12)


@pytest.mark.parametrize("nu", [0, 1, 1.5, 3, 7.5])
def test_bessel_j_zeros(nu):
    z = S.bessel_j_zeros(nu, 30)
    ref = [float(mp.besseljzero(nu, k)) for k in range(1, 31)]
    assert np.allclose(z, ref, rtol=1e-12, atol=0)


def test_bessel_i_scaled_small_cases():
    assert S.bessel_i_scaled(0, 0.0) == 1.0
    assert S.bessel_i_scaled(3, 0.0) == 0.0


def _i_miller_oracle(n, x):
    # backward recurrence in 40 digits normalized by I_0 + 2 sum I_k = e^x
    x = mp.mpf(x)
    top = 200
    f = [mp.mpf(0)] * (top + 2)
    f[top] = mp.mpf("1e-40")
    for k in range(top, 0, -1):
        f[k - 1] = 2 * k / x * f[k] + f[k + 1]
    norm = f[0] + 2 * mp.fsum(f[1 : top + 1])
    return f[n] / norm


def test_bessel_i_scaled_miller_oracle():
    assert abs(S.bessel_i_scaled(1, 2.0) - float(_i_miller_oracle(1, 2))) < 1e-12


@pytest.mark.parametrize("n", [0, 1, 2, 5, 10, 40])
def test_bessel_i_scaled_against_mpmath(n):
    for x in [0.01, 0.5, 2, 8, 29.9, 30.1, 55, 200, 5000]:
        ref = float(mp.besseli(n, x) * mp.exp(-x))
        assert S.bessel_i_scaled(n, x) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 10])
def test_bessel_i_scaled_continuous_across_crossover(n):
    for x in np.linspace(27, 33, 20):
        series, _ = S._i_scaled_series(n, float(x), S.DEFAULT_ACCURACY)
        assert S.bessel_i_scaled(n, float(x)) == pytest.approx(series, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 30), x=st.floats(1e-3, 500))
def test_bessel_i_scaled_decreasing_in_order(n, x):
    a = S.bessel_i_scaled(n, x)
    b = S.bessel_i_scaled(n + 1, x)
    assert 0 < b < a


def test_reg_lower_gamma_values():
    assert S.reg_lower_gamma(1, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert S.reg_lower_gamma(5, 0.0) == 0.0
    ref = float(mp.quad(lambda u: u**2 * mp.exp(-u) / 2, [0, 2.5]))
    assert abs(S.reg_lower_gamma(3, 2.5) - ref) < 1e-12


@pytest.mark.parametrize("shape", [1, 2, 7, 30, 200])
def test_reg_lower_gamma_against_mpmath(shape):
    for x in [0.1, shape / 2, shape, 2 * shape, shape + 10 * math.sqrt(shape)]:
        ref = float(mp.gammainc(shape, 0, x, regularized=True))
        assert S.reg_lower_gamma(shape, x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("shape", [1, 4, 25])
def test_reg_lower_gamma_monotone_and_saturates(shape):
    xs = np.linspace(0, shape + 40 * math.sqrt(shape), 200)
    vals = [S.reg_lower_gamma(shape, float(x)) for x in xs]
    assert vals[0] == 0.0
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - 1) < 1e-10


def test_poisson_tail_array_matches_gamma():
    x = 7.3
    arr = S.poisson_tail_array(x, 40)
    for k in (0, 3, 7, 20, 40):
        assert arr[k] == pytest.approx(S.reg_lower_gamma(k + 1, x), rel=1e-13)


def test_hyp2f2_trivial():
    assert S.hyp2f2(0.3, 1.7, 2.2, 4.1, 0.0) == 1.0
    assert S.hyp2f2(1, 1, 1, 1, 1.0) == pytest.approx(math.e, rel=1e-15)


@pytest.mark.parametrize("x", [-4.0, -0.5, 1.5, -16.0, -36.0])
def test_hyp2f2_against_extended_precision(x):
    ref = float(mp.hyp2f2(1, 1.5, 2, 3, x))
    assert S.hyp2f2(1, 1.5, 2, 3, x) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("D", [1, 2, 4, 6])
def test_hyp2f2_survives_heavy_cancellation(D):
    # largest terms reach ~1e30 here while the sum is O(1e-2)
    for x in (-49.0, -64.0, -79.9):
        v, err = S.hyp2f2(D, D + 0.5, D + 1, 2 * D + 1, x, full_output=True)
        ref = float(mp.hyp2f2(D, D + 0.5, D + 1, 2 * D + 1, x))
        assert v == pytest.approx(ref, rel=1e-14)
        assert err >= abs(v - ref)


def test_hyp2f2_guard():
    with pytest.raises(CancellationGuardError):
        S.hyp2f2(3, 3.5, 4, 7, -90.0)
    with pytest.raises(DomainError):
        S.hyp2f2(1, 1, -2.0, 1, 0.5)


def test_alpha_coeff_values():
    assert S.alpha_coeff(0, 7) == 1
    assert S.alpha_coeff(1, 1) == 3
    assert S.alpha_coeff(2, 1) == -15
    assert S.alpha_coeff_int(3, 2) == (16 - 1) * (16 - 9) * (16 - 25)


def test_alpha_coeff_ratio_identity():
    for D in range(1, 8):
        for k in range(0, 8):
            a = S.alpha_coeff_int(k, D)
            assert a != 0
            if 2 * D - 2 * k + 1 != 0:
                ratio = Fraction(S.alpha_coeff_int(k, D + 1), a)
                assert ratio == Fraction(2 * D + 2 * k + 1, 2 * D - 2 * k + 1)


def test_accuracy_validation():
    with pytest.raises(DomainError):
        S.Accuracy(rel_tol=0.0)
    with pytest.raises(DomainError):
        S.Accuracy(rel_tol=0.1)
