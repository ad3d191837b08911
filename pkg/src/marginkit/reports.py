"""Deterministic CSV/JSON report writers.

Every CSV starts with a comment row declaring the configuration hash and
scaling preset, so a report can always be traced back to the exact run that
produced it.  JSON files carry the same fields in a ``_meta`` object because
JSON has no comments.  All numbers are rendered with repr-quality precision
and a fixed locale (dot decimal separator, ISO dates); reruns of the same
configuration are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, datetime, time
from pathlib import Path
from typing import Mapping, Sequence

from .descstats import MomentSummary, TestResult
from .garch import GarchFit
from .margins import ComparisonReport, MarginCall, MarginReport
from .marketdata import ReturnSeries
from .tails import TailEstimate

MARGIN_COLUMNS = ("series", "model", "coverage", "waiting_days", "side",
                  "margin", "available", "scaling_preset")


@dataclass(frozen=True)
class ReportMeta:
    config_hash: str
    scaling_preset: str

    def comment_row(self) -> str:
        return f"# config_hash={self.config_hash} scaling_preset={self.scaling_preset}"

    def as_dict(self) -> dict:
        return {"config_hash": self.config_hash, "scaling_preset": self.scaling_preset}


def _fmt(value) -> str:
    if value is None:
        return "na"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, (date, time)):
        return value.isoformat()
    if isinstance(value, datetime):
        return value.isoformat(sep="T")
    return str(value)


def write_csv(path, columns: Sequence[str], rows: Sequence[Sequence], meta: ReportMeta) -> None:
    lines = [meta.comment_row(), ",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, payload, meta: ReportMeta) -> None:
    doc = {"_meta": meta.as_dict()}
    doc.update(payload)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n",
                          encoding="utf-8")


def _round_trip_safe(value):
    return None if value is None else float(value)


# ---------------------------------------------------------------------------
# Row builders
# ---------------------------------------------------------------------------

def margin_report_rows(report: MarginReport) -> list[tuple]:
    return [
        (c.series, c.model, c.coverage, c.waiting_days, c.side,
         c.margin, c.available, report.scaling_preset)
        for c in report.cells
    ]


def margin_report_payload(report: MarginReport) -> dict:
    return {"cells": [
        {"series": c.series, "model": c.model, "coverage": c.coverage,
         "waiting_days": c.waiting_days, "side": c.side,
         "margin": _round_trip_safe(c.margin), "available": c.available,
         "horizon": c.horizon, "note": c.note}
        for c in report.cells
    ]}


COMPARISON_COLUMNS = ("model", "coverage", "waiting_days", "side",
                      "scaled_5min", "scaled_1h", "daily_mean",
                      "t_stat_5min", "p_value_5min", "t_stat_1h", "p_value_1h")


def comparison_rows(report: ComparisonReport) -> list[tuple]:
    return [
        (r.model, r.coverage, r.waiting_days, r.side, r.scaled_5min, r.scaled_1h,
         r.daily_mean, r.t_stat_5min, r.p_value_5min, r.t_stat_1h, r.p_value_1h)
        for r in report.rows
    ]


def comparison_payload(report: ComparisonReport) -> dict:
    return {
        "t_5min": report.t_5min,
        "t_1h": report.t_1h,
        "rows": [
            {"model": r.model, "coverage": r.coverage, "waiting_days": r.waiting_days,
             "side": r.side, "scaled_5min": _round_trip_safe(r.scaled_5min),
             "scaled_1h": _round_trip_safe(r.scaled_1h),
             "daily_mean": _round_trip_safe(r.daily_mean),
             "t_stat_5min": _round_trip_safe(r.t_stat_5min),
             "p_value_5min": _round_trip_safe(r.p_value_5min),
             "t_stat_1h": _round_trip_safe(r.t_stat_1h),
             "p_value_1h": _round_trip_safe(r.p_value_1h),
             "note": r.note}
            for r in report.rows
        ],
    }


STATS_COLUMNS = ("series", "panel", "n", "mean", "std_dev", "skewness",
                 "excess_kurtosis", "ks_stat", "ks_p", "lb_stat", "lb_p",
                 "min", "q25", "median", "q75", "max")


def stats_row(series_label: str, panel: str, summary: MomentSummary,
              ks: TestResult | None, lb: TestResult | None) -> tuple:
    return (series_label, panel, summary.n, summary.mean, summary.std_dev,
            summary.skewness, summary.excess_kurtosis,
            None if ks is None else ks.statistic, None if ks is None else ks.p_value,
            None if lb is None else lb.statistic, None if lb is None else lb.p_value,
            summary.minimum, summary.q25, summary.median, summary.q75, summary.maximum)


TAIL_COLUMNS = ("series", "side", "alpha", "se_alpha", "inv_alpha", "se_inv_alpha",
                "threshold", "n_tail", "sample_size",
                "z_moment2", "p_moment2", "cdf_minus_half_moment2",
                "z_moment4", "p_moment4", "cdf_minus_half_moment4")


def tail_row(series_label: str, est: TailEstimate,
             test2: TestResult, test4: TestResult) -> tuple:
    return (series_label, est.side, est.alpha, est.se_alpha, est.inv_alpha,
            est.se_inv_alpha, est.threshold, est.n_tail, est.sample_size,
            test2.statistic, test2.p_value, test2.parameters["cdf_minus_half"],
            test4.statistic, test4.p_value, test4.parameters["cdf_minus_half"])


GARCH_COLUMNS = ("series", "n", "alpha0", "alpha1", "beta1", "mu",
                 "log_likelihood", "converged", "sigma2_last")


def garch_row(series_label: str, fit: GarchFit) -> tuple:
    return (series_label, int(fit.residuals.size), fit.params.alpha0,
            fit.params.alpha1, fit.params.beta1, fit.params.mu,
            fit.log_likelihood, fit.converged, float(fit.sigma2_path[-1]))


RETURNS_COLUMNS = ("day_index", "boundary_time", "return_pct")


def returns_rows(series: ReturnSeries) -> list[tuple]:
    n = len(series)
    days = series.day_index if series.day_index is not None else range(n)
    times = series.boundary_times if series.boundary_times is not None else [""] * n
    return [(d, t, float(v)) for d, t, v in zip(days, times, series.values)]


TICK_COLUMNS = ("timestamp", "price", "volume", "delivery_month")


def tick_rows(ticks) -> list[tuple]:
    return [(t.timestamp, t.price, t.volume, t.delivery_month) for t in ticks]


MONITOR_COLUMNS = ("day", "timestamp", "side", "cumulative_change_pct", "trigger_level_pct")


def monitor_rows(calls_by_day: Mapping) -> list[tuple]:
    rows = []
    for day, calls in calls_by_day.items():
        for c in calls:
            rows.append((day, c.timestamp, c.side, c.cumulative_change_pct,
                         c.trigger_level_pct))
    return rows
