import math

import numpy as np
import pytest

from heisenvar.errors import ConvergenceError
from heisenvar.quadrature import W_GAUSS, W_KRONROD, integrate


def test_rule_weights():
    assert W_KRONROD.sum() == pytest.approx(2.0, rel=1e-15)
    assert W_GAUSS.sum() == pytest.approx(2.0, rel=1e-15)


def test_polynomial_exact():
    v, err = integrate(lambda x: 7 * x**6 - 3 * x**2 + 1, 0.0, 2.0)
    assert v == pytest.approx(128 - 8 + 2, rel=1e-15)


def test_endpoint_singularity():
    v, _ = integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0, rel_tol=1e-10)
    assert v == pytest.approx(2.0, rel=1e-9)


def test_oscillatory_with_breakpoints():
    pts = np.arange(1, 200) * math.pi
    v, _ = integrate(np.sin, 0.0, 200 * math.pi, points=pts)
    assert abs(v) < 1e-11


def test_empty_interval():
    assert integrate(np.cos, 1.0, 1.0) == (0.0, 0.0)


def test_nonconvergence_reports():
    with pytest.raises(ConvergenceError) as info:
        integrate(lambda x: np.sin(1 / x) / x, 1e-9, 1.0, max_subdivisions=50)
    assert info.value.achieved > 0
