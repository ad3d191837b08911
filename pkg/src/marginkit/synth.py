"""Seeded synthetic data generators.

Every generator draws from a PCG64 stream seeded explicitly, so identical
specs reproduce identical output across runs and machines.  The generators
double as estimator oracles in the test suite: each kind has a known tail
index, variance or parameter set that the estimators must recover.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta

import numpy as np

from .errors import DataError
from .garch import GarchParams
from .marketdata import (
    DEFAULT_SESSION_CLOSE,
    DEFAULT_SESSION_OPEN,
    ReturnSeries,
    Tick,
    TickSeries,
    TradingCalendar,
)

KIND_GAUSSIAN = "gaussian_iid"
KIND_STUDENT_T = "student_t"
KIND_PARETO = "pareto"
KIND_GARCH = "garch11"
KIND_TICK_WALK = "tick_walk"

KINDS = (KIND_GAUSSIAN, KIND_STUDENT_T, KIND_PARETO, KIND_GARCH, KIND_TICK_WALK)


def rng_for(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 under an explicit integer seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate and with which parameters.

    ``length`` counts observations for return generators and trading days
    for ``tick_walk``.
    """

    kind: str
    length: int
    seed: int
    mu: float = 0.0
    sigma: float = 1.0
    nu: float = 3.0              # student_t degrees of freedom (= tail index)
    tail_alpha: float = 3.0      # pareto tail index
    garch: GarchParams | None = None
    # tick_walk layout
    start_date: date = date(2000, 1, 3)
    start_price: float = 6000.0
    step_sigma_pct: float = 0.1
    tick_interval_minutes: int = 5
    volume: int = 10
    delivery_month: str = "2000-03"
    session_open: time = DEFAULT_SESSION_OPEN
    session_close: time = DEFAULT_SESSION_CLOSE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown generator kind {self.kind!r}; choose from {KINDS}")
        if self.length < 1:
            raise DataError(f"length must be >= 1, got {self.length}")
        if self.sigma <= 0:
            raise DataError("sigma must be positive")
        if self.kind == KIND_STUDENT_T and self.nu <= 0:
            raise DataError("degrees of freedom must be positive")
        if self.kind == KIND_PARETO and self.tail_alpha <= 0:
            raise DataError("tail index must be positive")
        if self.kind == KIND_GARCH and self.garch is None:
            raise DataError("garch11 generation needs GarchParams")
        if self.kind == KIND_TICK_WALK:
            if self.start_price <= 0 or self.step_sigma_pct <= 0:
                raise DataError("tick walk needs positive start price and step sigma")
            if self.tick_interval_minutes < 1:
                raise DataError("tick interval must be at least one minute")


def simulate_garch11(params: GarchParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Simulate a GARCH(1,1) path started at its stationary variance."""
    if params.persistence >= 1.0:
        raise DataError("simulation needs alpha1 + beta1 < 1")
    z = rng.standard_normal(n)
    sigma2 = params.unconditional_variance()
    out = np.empty(n)
    eps = np.sqrt(sigma2) * z[0]
    out[0] = params.mu + eps
    for t in range(1, n):
        sigma2 = params.alpha0 + params.alpha1 * eps**2 + params.beta1 * sigma2
        eps = np.sqrt(sigma2) * z[t]
        out[t] = params.mu + eps
    return out


def _synthetic_series(values: np.ndarray, spec: GeneratorSpec) -> ReturnSeries:
    return ReturnSeries(values=values, frequency="synthetic",
                        label=f"{spec.kind}(seed={spec.seed})")


def _weekdays_from(start: date, count: int) -> list[date]:
    out: list[date] = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += timedelta(days=1)
    return out


def _tick_walk(spec: GeneratorSpec) -> TickSeries:
    """Exponentiated random walk traded exactly on the session grid.

    Emitting one trade per grid boundary (including the open) makes resampled
    intraday returns telescope exactly and gives every anchored daily series
    the same length.
    """
    cal = TradingCalendar(session_open=spec.session_open, session_close=spec.session_close)
    grid = cal.grid(spec.tick_interval_minutes)
    days = _weekdays_from(spec.start_date, spec.length)
    rng = rng_for(spec.seed)
    n_steps = len(days) * len(grid)
    steps = rng.standard_normal(n_steps) * (spec.step_sigma_pct / 100.0)
    steps[0] = 0.0  # the first tick trades at the start price
    log_prices = np.log(spec.start_price) + np.cumsum(steps)
    ticks: list[Tick] = []
    i = 0
    for day in days:
        for boundary in grid:
            ticks.append(Tick(
                timestamp=datetime.combine(day, boundary),
                price=float(np.exp(log_prices[i])),
                volume=spec.volume,
                delivery_month=spec.delivery_month,
            ))
            i += 1
    return TickSeries(ticks)


def generate(spec: GeneratorSpec) -> ReturnSeries | TickSeries:
    """Generate the series described by ``spec``; deterministic given seed."""
    rng = rng_for(spec.seed)
    if spec.kind == KIND_GAUSSIAN:
        return _synthetic_series(spec.mu + spec.sigma * rng.standard_normal(spec.length), spec)
    if spec.kind == KIND_STUDENT_T:
        return _synthetic_series(spec.mu + spec.sigma * rng.standard_t(spec.nu, spec.length), spec)
    if spec.kind == KIND_PARETO:
        # Standard Pareto on [1, inf): survival x^-alpha, tail index alpha.
        return _synthetic_series(1.0 + rng.pareto(spec.tail_alpha, spec.length), spec)
    if spec.kind == KIND_GARCH:
        return _synthetic_series(simulate_garch11(spec.garch, spec.length, rng), spec)
    return _tick_walk(spec)
