"""Counting statistics of the Heisenberg determinantal point processes on C^D.

Exact number variances on balls and polydisks, their large-R expansions,
Bernoulli spectra with exact count distributions and reproducible
sampling, and a generic radial Fourier engine for hyperuniformity checks.
"""

from .errors import (
    CancellationGuardError,
    ConvergenceError,
    DomainError,
    FitDegenerateError,
    HeisenvarError,
    ResourceGuardError,
    SelfCheckError,
)
from .exact import (
    AsymptoticSeries,
    HeisenbergParams,
    HUClass,
    HyperuniformityClass,
    Route,
    VarianceReport,
    asymptotic_ratio,
    classify,
    mean_ball,
    ratio,
    variance_ball_2f2,
    variance_ball_bessel,
    variance_polydisk,
)
from .specfun import Accuracy

__version__ = "0.1.0"

__all__ = [
    "Accuracy",
    "AsymptoticSeries",
    "CancellationGuardError",
    "ConvergenceError",
    "DomainError",
    "FitDegenerateError",
    "HUClass",
    "HeisenbergParams",
    "HeisenvarError",
    "HyperuniformityClass",
    "ResourceGuardError",
    "Route",
    "SelfCheckError",
    "VarianceReport",
    "asymptotic_ratio",
    "classify",
    "mean_ball",
    "ratio",
    "variance_ball_2f2",
    "variance_ball_bessel",
    "variance_polydisk",
]
