"""The margin engine.

Margins are positive magnitudes in percent of nominal: the deposit sized so a
one-horizon adverse price change stays within it with coverage probability p.
A long position reads the left (falling-price) tail, a short position the
right tail.  Four models share one estimator interface: fit on a return
series, then query ``margin(p, T, side)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtri
from scipy.stats import t as student_t
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import tails
from .descstats import moment_summary
from .errors import DataError, MarginkitError, MarginUnavailable
from .garch import Garch11
from .marketdata import ReturnSeries, TickSeries
from .validation import (
    as_values,
    check_coverage,
    check_horizon,
    check_positive,
    check_probability,
    check_side,
)

MODEL_GAUSSIAN = "gaussian"
MODEL_EVT = "evt"
MODEL_HISTORICAL = "historical"
MODEL_GARCH = "garch"

#: Scaling-horizon presets: intervals per day for (5-minute, 1-hour) returns.
#: "session" counts trading intervals in the default session; "calendar"
#: counts wall-clock intervals in 24 hours.
SCALING_PRESETS: Mapping[str, tuple[int, int]] = {
    "session": (113, 9),
    "calendar": (288, 24),
}

DEFAULT_COVERAGE_GRID = (0.95, 0.99, 0.996, 0.998)
DEFAULT_CALL_THRESHOLD = 0.65


# ---------------------------------------------------------------------------
# Margin arithmetic
# ---------------------------------------------------------------------------

def gaussian_margin(mu: float, sigma: float, p: float, T: float = 1.0,
                    side: str = "long") -> float:
    """Gaussian quantile margin |mu*T + z*sigma*sqrt(T)|.

    z is the standard normal quantile at p for a short position and at 1-p
    for a long one, so both sides come out as positive magnitudes.
    """
    sigma = check_positive(sigma, "sigma")
    p = check_probability(p, "p")
    T = check_horizon(T)
    side = check_side(side)
    z = ndtri(p) if side == "short" else ndtri(1.0 - p)
    return abs(mu * T + z * sigma * math.sqrt(T))


def sqrt_scale(ml_1: float, T: float) -> float:
    """Aggregate a one-interval margin to T intervals by sqrt(T)."""
    T = check_horizon(T)
    return math.sqrt(T) * ml_1


def historical_margin(series, p: float, side: str = "long") -> float:
    """Empirical loss quantile: smallest order statistic with rank n/N >= p.

    Returns for the given side are turned into losses (long positions lose
    when prices fall, so the series is negated), sorted ascending and scanned
    for the first rank fraction reaching p.  Quantiles needing fewer than one
    expected exceedance in sample (N*(1-p) < 1) are out of sample.
    """
    x = as_values(series)
    p = check_probability(p, "p")
    side = check_side(side)
    if x.size == 0:
        raise DataError("historical margin needs a non-empty series")
    if x.size * (1.0 - p) < 1.0:
        raise MarginUnavailable(
            f"coverage {p} is out of sample for {x.size} observations"
        )
    losses = np.sort(-x if side == "long" else x)
    fractions = np.arange(1, x.size + 1, dtype=float) / x.size
    rank = int(np.searchsorted(fractions, p, side="left"))
    return abs(float(losses[rank]))


def waiting_period(p: float) -> int:
    """Average trading days between margin-exceeding moves: round(1/(1-p))."""
    p = check_probability(p, "p")
    return round(1.0 / (1.0 - p))


def coverage_for_waiting(days: float) -> float:
    """Inverse of the waiting period: d days -> p = 1 - 1/d."""
    days = float(days)
    if days <= 1.0:
        raise DataError(f"waiting period must exceed 1 day, got {days}")
    return 1.0 - 1.0 / days


# ---------------------------------------------------------------------------
# Margin models (fit once per series, query many margins)
# ---------------------------------------------------------------------------

class BaseMarginModel(BaseEstimator):
    """Common surface: ``fit(returns)`` then ``margin(p, T, side)``.

    ``scale_to_horizon`` applies the model's own aggregation rule to a
    one-interval margin; models without a rule raise MarginUnavailable.
    """

    name: str = ""

    def fit(self, X, y=None):  # pragma: no cover - abstract
        raise NotImplementedError

    def margin(self, p: float, T: float = 1.0, side: str = "long") -> float:
        raise NotImplementedError

    def scale_to_horizon(self, ml_1: float, T: float, side: str = "long") -> float:
        raise MarginUnavailable(f"model {self.name!r} has no scaling rule")


class GaussianMarginModel(BaseMarginModel):
    """Unconditional Gaussian margin from the sample mean and deviation."""

    name = MODEL_GAUSSIAN

    def fit(self, X, y=None):
        summary = moment_summary(X)
        self.mu_ = summary.mean
        self.sigma_ = summary.std_dev
        return self

    def margin(self, p, T=1.0, side="long"):
        check_is_fitted(self, "sigma_")
        return gaussian_margin(self.mu_, self.sigma_, p, T=T, side=side)

    def scale_to_horizon(self, ml_1, T, side="long"):
        return sqrt_scale(ml_1, T)


class EvtMarginModel(BaseMarginModel):
    """Extreme-value margin from per-side bias-corrected tail estimates."""

    name = MODEL_EVT

    def __init__(self, eta: int | None = None):
        self.eta = eta

    def fit(self, X, y=None):
        self.left_ = tails.huisman_estimate(X, eta=self.eta, side=tails.SIDE_LEFT)
        self.right_ = tails.huisman_estimate(X, eta=self.eta, side=tails.SIDE_RIGHT)
        return self

    def _tail(self, side: str) -> tails.TailEstimate:
        check_is_fitted(self, "left_")
        return self.left_ if side == "long" else self.right_

    def margin(self, p, T=1.0, side="long"):
        p = check_coverage(p)
        side = check_side(side)
        est = self._tail(side)
        ml_1 = tails.evt_margin(est, 1.0 - p)
        return tails.feller_scale(ml_1, T, est.alpha) if T != 1.0 else ml_1

    def scale_to_horizon(self, ml_1, T, side="long"):
        return tails.feller_scale(ml_1, T, self._tail(check_side(side)).alpha)


class HistoricalMarginModel(BaseMarginModel):
    """Empirical-quantile margin; in-sample only and with no scaling rule."""

    name = MODEL_HISTORICAL

    def fit(self, X, y=None):
        self.values_ = as_values(X)
        return self

    def margin(self, p, T=1.0, side="long"):
        check_is_fitted(self, "values_")
        if check_horizon(T) != 1.0:
            raise MarginUnavailable("historical margins do not aggregate across horizons")
        return historical_margin(self.values_, p, side=side)


class GarchMarginModel(BaseMarginModel):
    """Conditional margin from the one-step GARCH(1,1) volatility forecast."""

    name = MODEL_GARCH

    def __init__(self, max_iter: int = 500):
        self.max_iter = max_iter

    def fit(self, X, y=None):
        self.garch_ = Garch11(max_iter=self.max_iter).fit(X)
        return self

    def margin(self, p, T=1.0, side="long"):
        check_is_fitted(self, "garch_")
        return self.garch_.margin(p, T=T, side=side)

    def scale_to_horizon(self, ml_1, T, side="long"):
        return sqrt_scale(ml_1, T)


MODEL_CLASSES: Mapping[str, type[BaseMarginModel]] = {
    MODEL_GAUSSIAN: GaussianMarginModel,
    MODEL_EVT: EvtMarginModel,
    MODEL_HISTORICAL: HistoricalMarginModel,
    MODEL_GARCH: GarchMarginModel,
}


def make_model(name: str, **kwargs) -> BaseMarginModel:
    if name not in MODEL_CLASSES:
        raise DataError(f"unknown margin model {name!r}; choose from {sorted(MODEL_CLASSES)}")
    cls = MODEL_CLASSES[name]
    accepted = {k: v for k, v in kwargs.items() if k in cls().get_params()}
    return cls(**accepted)


# ---------------------------------------------------------------------------
# Report grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginSpec:
    """One requested margin: coverage, horizon in intervals, side and model."""

    coverage: float
    horizon: float = 1.0
    side: str = "long"
    model: str = MODEL_GAUSSIAN

    def __post_init__(self):
        check_coverage(self.coverage)
        check_horizon(self.horizon)
        check_side(self.side)
        if self.model not in MODEL_CLASSES:
            raise DataError(f"unknown margin model {self.model!r}")


@dataclass(frozen=True)
class MarginCell:
    series: str
    model: str
    coverage: float
    side: str
    horizon: float
    margin: float | None
    available: bool
    note: str = ""

    @property
    def waiting_days(self) -> int:
        return waiting_period(self.coverage)


@dataclass(frozen=True, eq=False)
class MarginReport:
    cells: tuple[MarginCell, ...]
    scaling_preset: str = "session"

    def __len__(self) -> int:
        return len(self.cells)

    def lookup(self, series: str, model: str, coverage: float, side: str) -> MarginCell:
        for cell in self.cells:
            if (cell.series, cell.model, cell.side) == (series, model, side) and \
                    math.isclose(cell.coverage, coverage):
                return cell
        raise KeyError((series, model, coverage, side))


def build_specs(coverage_levels: Sequence[float], models: Sequence[str],
                sides: Sequence[str] = ("long", "short"),
                horizon: float = 1.0) -> list[MarginSpec]:
    """Cross product of coverage levels, models and sides at one horizon."""
    return [
        MarginSpec(coverage=p, horizon=horizon, side=side, model=model)
        for model in models
        for p in coverage_levels
        for side in sides
    ]


def margin_table(data: Mapping[str, ReturnSeries] | Sequence[ReturnSeries],
                 specs: Sequence[MarginSpec],
                 scaling_preset: str = "session",
                 model_options: Mapping[str, dict] | None = None) -> MarginReport:
    """Evaluate every (series, spec) margin, flagging failures as unavailable.

    Models are fitted once per series and reused across coverage levels and
    sides.  Any per-cell failure (fit or quantile) yields an unavailable cell
    with a note; the grid itself always completes.
    """
    if not isinstance(data, Mapping):
        data = {s.label: s for s in data}
    model_options = model_options or {}
    fitted: dict[tuple[str, str], BaseMarginModel | MarginkitError] = {}
    cells: list[MarginCell] = []
    for label, series in data.items():
        for spec in specs:
            key = (label, spec.model)
            if key not in fitted:
                try:
                    model = make_model(spec.model, **model_options.get(spec.model, {}))
                    fitted[key] = model.fit(series)
                except MarginkitError as exc:
                    fitted[key] = exc
            model_or_err = fitted[key]
            if isinstance(model_or_err, MarginkitError):
                cells.append(MarginCell(label, spec.model, spec.coverage, spec.side,
                                        spec.horizon, None, False, str(model_or_err)))
                continue
            try:
                value = model_or_err.margin(spec.coverage, T=spec.horizon, side=spec.side)
                cells.append(MarginCell(label, spec.model, spec.coverage, spec.side,
                                        spec.horizon, float(value), True))
            except MarginkitError as exc:
                cells.append(MarginCell(label, spec.model, spec.coverage, spec.side,
                                        spec.horizon, None, False, str(exc)))
    return MarginReport(cells=tuple(cells), scaling_preset=scaling_preset)


# ---------------------------------------------------------------------------
# Scaled intraday margins vs directly estimated daily margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    model: str
    coverage: float
    side: str
    scaled_5min: float | None
    scaled_1h: float | None
    daily_mean: float | None
    t_stat_5min: float | None
    p_value_5min: float | None
    t_stat_1h: float | None
    p_value_1h: float | None
    note: str = ""

    @property
    def waiting_days(self) -> int:
        return waiting_period(self.coverage)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    t_5min: float
    t_1h: float
    scaling_preset: str

    def __len__(self) -> int:
        return len(self.rows)


def _one_sample_t(values: np.ndarray, target: float) -> tuple[float, float]:
    """Two-sided one-sample t-test of ``values`` against ``target``."""
    n = values.size
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        return (0.0, 1.0) if mean == target else (math.inf, 0.0)
    t_stat = (mean - target) / (sd / math.sqrt(n))
    p = 2.0 * float(student_t.sf(abs(t_stat), n - 1))
    return t_stat, p


def compare_scaled_vs_daily(
    five_minute: ReturnSeries,
    one_hour: ReturnSeries,
    anchored: Sequence[ReturnSeries],
    specs: Sequence[MarginSpec],
    t_5min: float,
    t_1h: float,
    scaling_preset: str = "session",
    model_options: Mapping[str, dict] | None = None,
) -> ComparisonReport:
    """Daily margins from scaled intraday estimates vs anchored daily margins.

    For each (model, coverage, side): the one-interval intraday margins are
    scaled to a day by the model's rule (sqrt(T) for Gaussian and GARCH,
    T^(1/alpha) for the extreme-value model; the historical model has no
    rule), and the reference is the arithmetic mean of the margins over the
    anchored daily series.  A two-sided one-sample t-test compares the
    anchored margins against each scaled value.
    """
    model_options = model_options or {}
    t_5min = check_horizon(t_5min)
    t_1h = check_horizon(t_1h)
    combos = sorted({(s.model, s.coverage, s.side) for s in specs},
                    key=lambda c: (c[0], c[1], c[2]))
    models_needed = sorted({m for m, _, _ in combos})

    def _fit(series: ReturnSeries, name: str):
        try:
            return make_model(name, **model_options.get(name, {})).fit(series)
        except MarginkitError as exc:
            return exc

    fit_5 = {m: _fit(five_minute, m) for m in models_needed}
    fit_1h = {m: _fit(one_hour, m) for m in models_needed}
    fit_daily = {m: [_fit(s, m) for s in anchored] for m in models_needed}

    rows: list[ComparisonRow] = []
    for model_name, p, side in combos:
        notes: list[str] = []

        def scaled(fit, horizon) -> float | None:
            if isinstance(fit, MarginkitError):
                notes.append(str(fit))
                return None
            try:
                return fit.scale_to_horizon(fit.margin(p, T=1.0, side=side), horizon, side=side)
            except MarginkitError as exc:
                notes.append(str(exc))
                return None

        s5 = scaled(fit_5[model_name], t_5min)
        s1 = scaled(fit_1h[model_name], t_1h)

        daily_vals: list[float] = []
        daily_ok = True
        for fit in fit_daily[model_name]:
            if isinstance(fit, MarginkitError):
                notes.append(str(fit))
                daily_ok = False
                break
            try:
                daily_vals.append(fit.margin(p, T=1.0, side=side))
            except MarginkitError as exc:
                notes.append(str(exc))
                daily_ok = False
                break
        daily_mean = float(np.mean(daily_vals)) if daily_ok and daily_vals else None

        def ttest(scaled_value):
            if scaled_value is None or daily_mean is None:
                return None, None
            return _one_sample_t(np.asarray(daily_vals), scaled_value)

        t5_stat, t5_p = ttest(s5)
        t1_stat, t1_p = ttest(s1)
        rows.append(ComparisonRow(
            model=model_name, coverage=p, side=side,
            scaled_5min=s5, scaled_1h=s1, daily_mean=daily_mean,
            t_stat_5min=t5_stat, p_value_5min=t5_p,
            t_stat_1h=t1_stat, p_value_1h=t1_p,
            note="; ".join(dict.fromkeys(notes)),
        ))
    return ComparisonReport(rows=tuple(rows), t_5min=t_5min, t_1h=t_1h,
                            scaling_preset=scaling_preset)


# ---------------------------------------------------------------------------
# Intraday margin-call monitor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginCall:
    side: str
    timestamp: object  # datetime
    cumulative_change_pct: float
    trigger_level_pct: float


def intraday_call_monitor(path: TickSeries, daily_margin_long: float,
                          daily_margin_short: float,
                          threshold: float = DEFAULT_CALL_THRESHOLD) -> list[MarginCall]:
    """Margin calls triggered when the intraday move eats into the margin.

    Tracks the cumulative percent log change from the session's first trade.
    A long-side call fires the first time the move falls to or below
    -threshold * daily_margin_long (falling prices hurt longs); a short-side
    call fires the first time it rises to or above +threshold *
    daily_margin_short.  At most one call per side per day.
    """
    daily_margin_long = check_positive(daily_margin_long, "daily_margin_long")
    daily_margin_short = check_positive(daily_margin_short, "daily_margin_short")
    threshold = check_positive(threshold, "threshold")
    ticks = list(path)
    if not ticks:
        return []
    if len({t.day for t in ticks}) != 1:
        raise DataError("margin-call monitoring expects a single session's ticks")
    open_log = math.log(ticks[0].price)
    long_trigger = -threshold * daily_margin_long
    short_trigger = threshold * daily_margin_short
    calls: list[MarginCall] = []
    long_done = short_done = False
    for t in ticks:
        move = 100.0 * (math.log(t.price) - open_log)
        if not long_done and move <= long_trigger:
            calls.append(MarginCall("long", t.timestamp, move, long_trigger))
            long_done = True
        if not short_done and move >= short_trigger:
            calls.append(MarginCall("short", t.timestamp, move, short_trigger))
            short_done = True
        if long_done and short_done:
            break
    return calls
