"""Tick ingestion, calendar filtering, contract rolling and return resampling.

Prices are futures transaction prices in index points.  Returns everywhere in
this package are log price changes scaled by 100 (percent), so a daily
standard deviation near 1.3 reads as 1.3% of nominal.
"""

from __future__ import annotations

import bisect
import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DataError, ParseError

logger = logging.getLogger(__name__)

# Default session: 08:00-17:25 (565 minutes).  A full day then carries exactly
# 113 five-minute intervals and 9 hourly intervals; both counts are
# configuration, not constants, because venue timetables differ.
DEFAULT_SESSION_OPEN = time(8, 0)
DEFAULT_SESSION_CLOSE = time(17, 25)

#: Canonical frequency labels for resampled series.
FREQ_DAILY = "daily"
FREQ_1H = "1h"
FREQ_5MIN = "5min"

_INTERVAL_MINUTES = {FREQ_5MIN: 5, FREQ_1H: 60, "5-minute": 5, "1-hour": 60}


@dataclass(frozen=True)
class Tick:
    """One futures trade: timestamp, price, size and delivery month tag."""

    timestamp: datetime
    price: float
    volume: int
    delivery_month: str  # "YYYY-MM"

    @property
    def day(self) -> date:
        return self.timestamp.date()


@dataclass(frozen=True)
class TradingCalendar:
    """Session times plus the dates to drop entirely.

    Half days are removed like full holidays: a truncated session would
    otherwise contaminate the intraday grids of complete days.
    """

    full_holidays: frozenset = frozenset()
    half_days: frozenset = frozenset()
    session_open: time = DEFAULT_SESSION_OPEN
    session_close: time = DEFAULT_SESSION_CLOSE

    def __post_init__(self):
        if self.session_open >= self.session_close:
            raise DataError("session_open must precede session_close")
        overlap = set(self.full_holidays) & set(self.half_days)
        if overlap:
            raise DataError(f"dates listed as both holiday and half day: {sorted(overlap)}")

    @property
    def session_minutes(self) -> int:
        o, c = self.session_open, self.session_close
        return (c.hour - o.hour) * 60 + (c.minute - o.minute)

    def removed_dates(self) -> frozenset:
        return self.full_holidays | self.half_days

    def grid(self, interval_minutes: int) -> list[time]:
        """Interval boundaries from the open: b_0=open, b_k=open+k*interval.

        The number of full intervals is floor(session length / interval), so
        the default session yields 113 five-minute and 9 hourly intervals.
        """
        if interval_minutes <= 0:
            raise DataError("interval must be positive")
        n_intervals = self.session_minutes // interval_minutes
        if n_intervals < 1:
            raise DataError(
                f"interval of {interval_minutes} minutes does not fit in the session"
            )
        base = self.session_open.hour * 60 + self.session_open.minute
        out = []
        for k in range(n_intervals + 1):
            total = base + k * interval_minutes
            out.append(time(total // 60, total % 60))
        return out


class TickSeries:
    """Immutable ordered collection of ticks, possibly spanning delivery months."""

    def __init__(self, ticks: Iterable[Tick]):
        self._ticks: tuple[Tick, ...] = tuple(ticks)
        last_by_month: dict[str, datetime] = {}
        for i, t in enumerate(self._ticks):
            if t.price <= 0 or not math.isfinite(t.price):
                raise DataError(f"tick {i}: price must be positive, got {t.price}")
            if t.volume < 0:
                raise DataError(f"tick {i}: volume must be non-negative, got {t.volume}")
            prev = last_by_month.get(t.delivery_month)
            if prev is not None and t.timestamp < prev:
                raise DataError(
                    f"tick {i}: timestamps regress within delivery month {t.delivery_month}"
                )
            last_by_month[t.delivery_month] = t.timestamp

    def __len__(self) -> int:
        return len(self._ticks)

    def __iter__(self) -> Iterator[Tick]:
        return iter(self._ticks)

    def __getitem__(self, i: int) -> Tick:
        return self._ticks[i]

    @property
    def ticks(self) -> tuple[Tick, ...]:
        return self._ticks

    def delivery_months(self) -> list[str]:
        return sorted({t.delivery_month for t in self._ticks})

    def days(self) -> list[date]:
        return sorted({t.day for t in self._ticks})

    def by_day(self) -> dict[date, list[Tick]]:
        out: dict[date, list[Tick]] = {}
        for t in self._ticks:
            out.setdefault(t.day, []).append(t)
        # Months may interleave out of time order within a day; resampling
        # relies on per-day time order.
        for day_ticks in out.values():
            day_ticks.sort(key=lambda t: t.timestamp)
        return dict(sorted(out.items()))


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log returns x100 at a declared frequency, with per-value day tags.

    ``day_index`` and ``boundary_times`` run parallel to ``values``; they are
    None for synthetic series that have no calendar placement.
    """

    values: np.ndarray
    frequency: str
    anchor: time | None = None
    day_index: tuple | None = None
    boundary_times: tuple | None = None
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise DataError("return values must be 1-D")
        if not np.all(np.isfinite(vals)):
            raise DataError("return values must be finite")
        object.__setattr__(self, "values", vals)
        for name in ("day_index", "boundary_times"):
            seq = getattr(self, name)
            if seq is not None:
                if len(seq) != vals.size:
                    raise DataError(f"{name} length must match values")
                object.__setattr__(self, name, tuple(seq))
        if not self.label:
            if self.frequency == FREQ_DAILY and self.anchor is not None:
                object.__setattr__(self, "label", f"daily@{self.anchor:%H:%M}")
            else:
                object.__setattr__(self, "label", self.frequency)

    def __len__(self) -> int:
        return int(self.values.size)


def parse_ticks(lines: Iterable[str]) -> TickSeries:
    """Parse tick CSV rows (timestamp, price, volume, delivery_month).

    The header row is optional.  Malformed rows raise ParseError naming the
    1-based line number; an empty stream yields an empty series.
    """
    ticks: list[Tick] = []
    n_rows = 0
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or all(not f.strip() for f in row):
            continue
        n_rows += 1
        if len(row) != 4:
            if lineno == 1 and _looks_like_header(row):
                n_rows -= 1
                continue
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
        ts_f, price_f, vol_f, month_f = (f.strip() for f in row)
        if lineno == 1 and _looks_like_header(row):
            n_rows -= 1
            continue
        try:
            ts = datetime.fromisoformat(ts_f)
        except ValueError:
            raise ParseError(f"line {lineno}: malformed timestamp {ts_f!r}") from None
        try:
            price = float(price_f)
        except ValueError:
            raise ParseError(f"line {lineno}: malformed price {price_f!r}") from None
        if not math.isfinite(price) or price <= 0:
            raise ParseError(f"line {lineno}: price must be positive, got {price_f!r}")
        try:
            volume = int(vol_f)
        except ValueError:
            raise ParseError(f"line {lineno}: malformed volume {vol_f!r}") from None
        if volume < 0:
            raise ParseError(f"line {lineno}: volume must be non-negative")
        if not _valid_month_tag(month_f):
            raise ParseError(f"line {lineno}: malformed delivery month {month_f!r}")
        ticks.append(Tick(ts, price, volume, month_f))
    try:
        series = TickSeries(ticks)
    except DataError as exc:
        raise ParseError(str(exc)) from None
    logger.info("parsed %d ticks from %d data rows", len(series), n_rows)
    return series


def _looks_like_header(row: Sequence[str]) -> bool:
    if len(row) < 2:
        return True
    try:
        datetime.fromisoformat(row[0].strip())
        return False
    except ValueError:
        pass
    try:
        float(row[1].strip())
        return False
    except ValueError:
        return True


def _valid_month_tag(tag: str) -> bool:
    parts = tag.split("-")
    if len(parts) != 2:
        return False
    y, m = parts
    return y.isdigit() and len(y) == 4 and m.isdigit() and 1 <= int(m) <= 12


def read_ticks_csv(path) -> TickSeries:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_ticks(fh)


def filter_calendar(ticks: TickSeries, cal: TradingCalendar) -> TickSeries:
    """Drop ticks on removed dates and outside [session_open, session_close]."""
    removed = cal.removed_dates()
    kept = [
        t
        for t in ticks
        if t.day not in removed
        and cal.session_open <= t.timestamp.time() <= cal.session_close
    ]
    return TickSeries(kept)


def roll_contracts(ticks: TickSeries) -> TickSeries:
    """Stitch delivery months into one series by the volume crossover rule.

    Each trading day takes ticks from the active month only.  The day after
    the next month's summed daily volume first exceeds the active month's,
    the active month advances.  Days on which the active month has no ticks
    are skipped with a warning.
    """
    months = ticks.delivery_months()
    if len(months) <= 1:
        return ticks
    per_day = ticks.by_day()
    out: list[Tick] = []
    active_idx = 0
    switch_pending = False
    for day, day_ticks in per_day.items():
        if switch_pending:
            active_idx += 1
            switch_pending = False
        active = months[active_idx]
        active_ticks = [t for t in day_ticks if t.delivery_month == active]
        if active_ticks:
            out.extend(active_ticks)
        else:
            logger.warning(
                "no ticks in active delivery month %s on %s; day skipped", active, day
            )
        if active_idx + 1 < len(months):
            nxt = months[active_idx + 1]
            vol_active = sum(t.volume for t in active_ticks)
            vol_next = sum(t.volume for t in day_ticks if t.delivery_month == nxt)
            if vol_next > vol_active:
                switch_pending = True
    return TickSeries(out)


def _last_price_at_or_before(times: list[time], prices: list[float], cutoff: time):
    """Price of the last trade at or before ``cutoff``, or None."""
    idx = bisect.bisect_right(times, cutoff)
    if idx == 0:
        return None
    return prices[idx - 1]


def _day_times_prices(day_ticks: list[Tick]) -> tuple[list[time], list[float]]:
    return [t.timestamp.time() for t in day_ticks], [t.price for t in day_ticks]


def resample_anchored_daily(ticks: TickSeries, anchor: time) -> ReturnSeries:
    """Day-over-day log returns measured at a fixed intraday anchor time.

    The anchor price is the last trade at or before the anchor on each day.
    Day pairs where either day lacks an anchor price are omitted with a
    warning, so the output pairs consecutive trading days only.
    """
    per_day = ticks.by_day()
    if len(per_day) < 2:
        raise DataError("anchored daily resampling needs at least 2 trading days")
    days = list(per_day)
    anchor_price: dict[date, float] = {}
    for day, day_ticks in per_day.items():
        times, prices = _day_times_prices(day_ticks)
        price = _last_price_at_or_before(times, prices, anchor)
        if price is None:
            logger.warning("no trade at or before %s on %s; day pair omitted", anchor, day)
        else:
            anchor_price[day] = price
    values, tags = [], []
    for prev, cur in zip(days, days[1:]):
        if prev in anchor_price and cur in anchor_price:
            values.append(100.0 * (math.log(anchor_price[cur]) - math.log(anchor_price[prev])))
            tags.append(cur)
    return ReturnSeries(
        values=np.array(values, dtype=float),
        frequency=FREQ_DAILY,
        anchor=anchor,
        day_index=tuple(tags),
        boundary_times=tuple(anchor for _ in tags),
    )


def resample_intraday(
    ticks: TickSeries,
    interval: str | int,
    cal: TradingCalendar | None = None,
) -> ReturnSeries:
    """Within-day log returns on the session interval grid.

    ``interval`` is "5min", "1h" or a number of minutes.  Boundary prices use
    the last trade at or before each boundary within the same day; leading
    boundaries before the first trade of a day drop their interval rather
    than carry a price across days.
    """
    if isinstance(interval, str):
        if interval not in _INTERVAL_MINUTES:
            raise DataError(f"unknown interval {interval!r}; use '5min' or '1h'")
        minutes = _INTERVAL_MINUTES[interval]
        freq = FREQ_5MIN if minutes == 5 else FREQ_1H
    else:
        minutes = int(interval)
        freq = {5: FREQ_5MIN, 60: FREQ_1H}.get(minutes, f"{minutes}min")
    cal = cal or TradingCalendar()
    boundaries = cal.grid(minutes)
    values, tags, btimes = [], [], []
    for day, day_ticks in ticks.by_day().items():
        times, prices = _day_times_prices(day_ticks)
        if not times:
            logger.warning("no ticks on %s; day skipped", day)
            continue
        bound_prices = [_last_price_at_or_before(times, prices, b) for b in boundaries]
        for j in range(1, len(boundaries)):
            p_prev, p_cur = bound_prices[j - 1], bound_prices[j]
            if p_prev is None or p_cur is None:
                continue
            values.append(100.0 * (math.log(p_cur) - math.log(p_prev)))
            tags.append(day)
            btimes.append(boundaries[j])
    return ReturnSeries(
        values=np.array(values, dtype=float),
        frequency=freq,
        day_index=tuple(tags),
        boundary_times=tuple(btimes),
    )


def intervals_per_day(cal: TradingCalendar, interval: str | int) -> int:
    """Number of complete intervals a full session holds."""
    minutes = _INTERVAL_MINUTES.get(interval, interval if isinstance(interval, int) else None)
    if minutes is None:
        raise DataError(f"unknown interval {interval!r}")
    return cal.session_minutes // int(minutes)
