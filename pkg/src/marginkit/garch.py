"""GARCH(1,1) with Gaussian innovations, fitted by maximum likelihood.

The conditional variance follows the standard recursion
``sigma2[t] = alpha0 + alpha1 * eps[t-1]**2 + beta1 * sigma2[t-1]`` with the
conditional mean held at the sample mean: over horizons of a day or less the
expected price change is negligible next to its volatility, so estimating it
jointly buys nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import ndtri
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import DataError, DegenerateSeriesError, InsufficientDataError
from .validation import (
    as_values,
    check_coverage,
    check_horizon,
    check_min_length,
    check_non_negative,
    check_side,
)

MIN_OBS = 100
DEFAULT_MAX_ITER = 500
_FLOOR = 1e-12


@dataclass(frozen=True)
class GarchParams:
    """Level, ARCH and GARCH coefficients (percent^2 units) plus the mean."""

    alpha0: float
    alpha1: float
    beta1: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise DataError(f"alpha0 must be positive, got {self.alpha0}")
        if self.alpha1 < 0 or self.beta1 < 0:
            raise DataError("alpha1 and beta1 must be non-negative")
        if self.alpha1 + self.beta1 > 1.0:
            raise DataError(
                f"alpha1 + beta1 must not exceed 1, got {self.alpha1 + self.beta1}"
            )

    @property
    def persistence(self) -> float:
        return self.alpha1 + self.beta1

    def unconditional_variance(self) -> float:
        if self.persistence >= 1.0:
            raise DataError("unconditional variance undefined at unit persistence")
        return self.alpha0 / (1.0 - self.persistence)


@dataclass(frozen=True, eq=False)
class GarchFit:
    params: GarchParams
    sigma2_path: np.ndarray
    residuals: np.ndarray
    log_likelihood: float
    converged: bool
    n_iter: int = 0

    def __post_init__(self):
        if self.sigma2_path.size != self.residuals.size:
            raise DataError("variance path and residuals must have equal length")
        if np.any(self.sigma2_path <= 0):
            raise DataError("conditional variance path must be positive")


def _variance_path(eps2: np.ndarray, alpha0: float, alpha1: float, beta1: float,
                   sigma2_0: float) -> np.ndarray:
    """Run the variance recursion with sigma2[0] fixed at ``sigma2_0``."""
    out = np.empty_like(eps2)
    out[0] = sigma2_0
    if eps2.size > 1:
        driven = alpha0 + alpha1 * eps2[:-1]
        out[1:] = lfilter([1.0], [1.0, -beta1], driven, zi=np.array([beta1 * sigma2_0]))[0]
    return out


def _gaussian_loglik(eps2: np.ndarray, sigma2: np.ndarray) -> float:
    return float(-0.5 * np.sum(np.log(2.0 * np.pi) + np.log(sigma2) + eps2 / sigma2))


def _feasible(theta: np.ndarray) -> bool:
    a0, a1, b1 = theta
    return a0 > 0 and a1 >= 0 and b1 >= 0 and a1 + b1 <= 1.0


def _project(theta: np.ndarray) -> tuple[float, float, float]:
    """Pull a nearly-feasible optimizer point exactly onto the constraint set."""
    a0 = max(float(theta[0]), _FLOOR)
    a1 = min(max(float(theta[1]), 0.0), 1.0)
    b1 = min(max(float(theta[2]), 0.0), 1.0)
    s = a1 + b1
    if s > 1.0:
        a1, b1 = a1 / s, b1 / s
    return a0, a1, b1


def fit_garch11(series, max_iter: int = DEFAULT_MAX_ITER) -> GarchFit:
    """Maximum-likelihood GARCH(1,1) fit.

    Deterministic Nelder-Mead search from (0.05*var, 0.05, 0.90) with an
    infeasibility penalty; the final point is projected exactly onto the
    constraint set.  If the search cannot improve on the starting point the
    fit is returned at the start with ``converged=False``.
    """
    x = as_values(series)
    check_min_length(x, MIN_OBS, "GARCH(1,1) fit")
    mu = float(x.mean())
    eps = x - mu
    var = float(np.var(x, ddof=1))
    if var == 0.0:
        raise DegenerateSeriesError("zero variance: GARCH fit undefined")
    eps2 = eps**2
    sigma2_0 = var

    def neg_loglik(theta: np.ndarray) -> float:
        if not _feasible(theta):
            return 1e12
        path = _variance_path(eps2, theta[0], theta[1], theta[2], sigma2_0)
        if np.any(path <= 0):
            return 1e12
        return -_gaussian_loglik(eps2, path)

    start = np.array([0.05 * var, 0.05, 0.90])
    res = minimize(
        neg_loglik,
        start,
        method="Nelder-Mead",
        options={"maxiter": int(max_iter), "xatol": 1e-9, "fatol": 1e-9},
    )
    a0, a1, b1 = _project(res.x)
    ll_fit = _gaussian_loglik(eps2, _variance_path(eps2, a0, a1, b1, sigma2_0))
    ll_start = -neg_loglik(start)
    converged = bool(res.success)
    if not math.isfinite(ll_fit) or ll_fit < ll_start:
        a0, a1, b1 = start
        ll_fit = ll_start
        converged = False
    params = GarchParams(alpha0=a0, alpha1=a1, beta1=b1, mu=mu)
    return GarchFit(
        params=params,
        sigma2_path=_variance_path(eps2, a0, a1, b1, sigma2_0),
        residuals=eps,
        log_likelihood=ll_fit,
        converged=converged,
        n_iter=int(res.nit),
    )


def forecast_sigma2(fit: GarchFit | GarchParams, last_eps2: float,
                    last_sigma2: float) -> float:
    """One-step variance forecast: alpha0 + alpha1*eps^2 + beta1*sigma^2."""
    params = fit.params if isinstance(fit, GarchFit) else fit
    last_eps2 = check_non_negative(last_eps2, "last_eps2")
    last_sigma2 = check_non_negative(last_sigma2, "last_sigma2")
    return params.alpha0 + params.alpha1 * last_eps2 + params.beta1 * last_sigma2


def garch_margin(fit: GarchFit, p: float, T: float = 1.0, side: str = "long") -> float:
    """Margin from the one-step conditional volatility at the sample's end.

    |mu*T + q * sigma_next * sqrt(T)| with q the standard normal quantile at
    p for a short position and at 1-p for a long one.
    """
    p = check_coverage(p)
    T = check_horizon(T)
    side = check_side(side)
    sigma_next = math.sqrt(
        forecast_sigma2(fit, float(fit.residuals[-1]) ** 2, float(fit.sigma2_path[-1]))
    )
    q = ndtri(p) if side == "short" else ndtri(1.0 - p)
    return abs(fit.params.mu * T + q * sigma_next * math.sqrt(T))


class Garch11(BaseEstimator):
    """GARCH(1,1) conditional-volatility model with the fit/attributes API.

    Attributes (after ``fit``): ``fit_`` (GarchFit), ``params_``,
    ``sigma2_path_``, ``log_likelihood_``, ``converged_``.
    """

    def __init__(self, max_iter: int = DEFAULT_MAX_ITER):
        self.max_iter = max_iter

    def fit(self, X, y=None):
        self.fit_ = fit_garch11(X, max_iter=self.max_iter)
        self.params_ = self.fit_.params
        self.sigma2_path_ = self.fit_.sigma2_path
        self.log_likelihood_ = self.fit_.log_likelihood
        self.converged_ = self.fit_.converged
        return self

    def forecast_sigma2(self, last_eps2: float | None = None,
                        last_sigma2: float | None = None) -> float:
        check_is_fitted(self, "fit_")
        if last_eps2 is None:
            last_eps2 = float(self.fit_.residuals[-1]) ** 2
        if last_sigma2 is None:
            last_sigma2 = float(self.fit_.sigma2_path[-1])
        return forecast_sigma2(self.fit_, last_eps2, last_sigma2)

    def margin(self, p: float, T: float = 1.0, side: str = "long") -> float:
        check_is_fitted(self, "fit_")
        return garch_margin(self.fit_, p, T=T, side=side)
