"""Input validation helpers used by estimators and the margin engine."""

from __future__ import annotations

import numpy as np

from .errors import DataError, InsufficientDataError

SIDES = ("long", "short")


def as_values(x) -> np.ndarray:
    """Coerce a return series or array-like to a 1-D float array.

    Accepts anything with a ``values`` attribute (e.g. ``ReturnSeries``) or a
    plain array-like.  Rejects non-finite entries and non-1-D shapes.
    """
    if hasattr(x, "values") and not isinstance(x, np.ndarray):
        x = x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"expected a 1-D series, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("series contains non-finite values")
    return arr


def check_min_length(arr: np.ndarray, n_min: int, what: str) -> None:
    if arr.size < n_min:
        raise InsufficientDataError(
            f"{what} requires at least {n_min} observations, got {arr.size}"
        )


def check_probability(p: float, name: str = "p", *, open_low: bool = True,
                      open_high: bool = True) -> float:
    p = float(p)
    low_ok = p > 0.0 if open_low else p >= 0.0
    high_ok = p < 1.0 if open_high else p <= 1.0
    if not (low_ok and high_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise DataError(f"{name} must lie in {lo}0, 1{hi}, got {p}")
    return p


def check_coverage(p: float) -> float:
    """Coverage probabilities sit strictly between one half and one."""
    p = float(p)
    if not 0.5 < p < 1.0:
        raise DataError(f"coverage probability must lie in (0.5, 1), got {p}")
    return p


def check_horizon(T: float) -> float:
    T = float(T)
    if not (np.isfinite(T) and T >= 1.0):
        raise DataError(f"horizon must be a finite number >= 1, got {T}")
    return T


def check_side(side: str) -> str:
    if side not in SIDES:
        raise DataError(f"side must be one of {SIDES}, got {side!r}")
    return side


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not (np.isfinite(value) and value > 0.0):
        raise DataError(f"{name} must be positive and finite, got {value}")
    return value


def check_non_negative(value: float, name: str) -> float:
    value = float(value)
    if not (np.isfinite(value) and value >= 0.0):
        raise DataError(f"{name} must be non-negative and finite, got {value}")
    return value
