"""Descriptive moments, order-statistic quantiles, and two diagnostics:
a Kolmogorov-Smirnov normality test with estimated parameters and the
Ljung-Box white-noise test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2

from .errors import DegenerateSeriesError, InsufficientDataError
from .validation import as_values, check_min_length, check_probability

# The KS null distribution is simulated; a fixed default seed keeps report
# runs reproducible across machines.
DEFAULT_KS_REPS = 10_000
DEFAULT_KS_SEED = 1860


@dataclass(frozen=True)
class MomentSummary:
    """Sample moments and quartiles of a return series, in percent units."""

    n: int
    mean: float
    std_dev: float
    skewness: float
    excess_kurtosis: float
    minimum: float
    q25: float
    median: float
    q75: float
    maximum: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    test_name: str
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of [0, 1]: {self.p_value}")


def moment_summary(series) -> MomentSummary:
    """Mean, n-1 standard deviation, moment skewness/excess kurtosis, quartiles.

    Skewness is m3/m2^(3/2) and excess kurtosis m4/m2^2 - 3, with central
    moments using the n denominator.
    """
    x = as_values(series)
    check_min_length(x, 4, "moment summary")
    mean = float(x.mean())
    centered = x - mean
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        raise DegenerateSeriesError("zero variance: skewness and kurtosis undefined")
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    return MomentSummary(
        n=int(x.size),
        mean=mean,
        std_dev=float(x.std(ddof=1)),
        skewness=m3 / m2**1.5,
        excess_kurtosis=m4 / m2**2 - 3.0,
        minimum=float(x.min()),
        q25=empirical_quantile(x, 0.25),
        median=empirical_quantile(x, 0.5),
        q75=empirical_quantile(x, 0.75),
        maximum=float(x.max()),
    )


def empirical_quantile(series, q: float) -> float:
    """Nearest-rank quantile: the ceil(q*n)-th order statistic.

    q=0 maps to the minimum and q=1 to the maximum; no interpolation.
    """
    x = as_values(series)
    check_min_length(x, 1, "empirical quantile")
    q = check_probability(q, "q", open_low=False, open_high=False)
    rank = min(x.size, max(1, math.ceil(q * x.size)))
    return float(np.sort(x)[rank - 1])


def _ks_statistic_rows(samples: np.ndarray) -> np.ndarray:
    """KS distance to a normal with row-estimated mean/std, one row at a time.

    D = sup_x |F_hat(x) - Phi((x - mu_hat)/sd_hat)| evaluated at both sides
    of every jump of the empirical CDF.
    """
    n = samples.shape[1]
    mu = samples.mean(axis=1, keepdims=True)
    sd = samples.std(axis=1, ddof=1, keepdims=True)
    z = np.sort((samples - mu) / sd, axis=1)
    cdf = ndtr(z)
    i = np.arange(1, n + 1, dtype=float)
    d_plus = i / n - cdf
    d_minus = cdf - (i - 1.0) / n
    return np.maximum(d_plus, d_minus).max(axis=1)


_KS_NULL_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _ks_null_table(n: int, reps: int, seed: int) -> np.ndarray:
    key = (n, reps, seed)
    if key not in _KS_NULL_CACHE:
        rng = np.random.Generator(np.random.PCG64(seed))
        _KS_NULL_CACHE[key] = _ks_statistic_rows(rng.standard_normal((reps, n)))
    return _KS_NULL_CACHE[key]


def ks_normality(series, mc_reps: int = DEFAULT_KS_REPS,
                 seed: int = DEFAULT_KS_SEED) -> TestResult:
    """KS test of normality with mean and std estimated from the sample.

    Because parameters are estimated, the classical KS null does not apply;
    the p-value is computed by simulating ``mc_reps`` Gaussian samples of the
    same size and re-estimating parameters on each.
    """
    x = as_values(series)
    check_min_length(x, 8, "KS normality test")
    if x.std(ddof=1) == 0.0:
        raise DegenerateSeriesError("zero variance: KS normality test undefined")
    d = float(_ks_statistic_rows(x[None, :])[0])
    null = _ks_null_table(x.size, int(mc_reps), int(seed))
    p = (1.0 + int(np.sum(null >= d))) / (null.size + 1.0)
    return TestResult(
        statistic=d,
        p_value=float(p),
        test_name="ks_normality",
        parameters={"n": x.size, "mc_reps": int(mc_reps), "seed": int(seed)},
    )


def ljung_box(series, lags: int = 20) -> TestResult:
    """Ljung-Box Q over the first ``lags`` autocorrelations, chi-square p-value.

    Q = n(n+2) * sum_k acf_k^2 / (n-k), referred to chi-square with ``lags``
    degrees of freedom.
    """
    x = as_values(series)
    lags = int(lags)
    if lags < 1:
        raise InsufficientDataError("lag count must be >= 1")
    if x.size <= lags + 1:
        raise InsufficientDataError(
            f"Ljung-Box with {lags} lags needs more than {lags + 1} observations"
        )
    centered = x - x.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        raise DegenerateSeriesError("zero variance: autocorrelations undefined")
    n = x.size
    acf = np.array([float(centered[k:] @ centered[:-k]) / denom for k in range(1, lags + 1)])
    k = np.arange(1, lags + 1, dtype=float)
    q = float(n * (n + 2.0) * np.sum(acf**2 / (n - k)))
    return TestResult(
        statistic=q,
        p_value=float(chi2.sf(q, lags)),
        test_name="ljung_box",
        parameters={"lags": lags},
    )
