"""Time-series container, CSV ingestion and the elementary macro arithmetic.

Times are decimal years throughout. ISO dates map to
``year + (day_of_year - 1) / days_in_year``.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date

import numpy as np


class SeriesError(ValueError):
    """Raised for malformed or inadmissible time-series input."""


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        v = np.array(self.values, dtype=float).ravel()
        if t.size == 0:
            raise SeriesError("empty series")
        if t.size != v.size:
            raise SeriesError(f"length mismatch: {t.size} times vs {v.size} values")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise SeriesError("series contains non-finite entries")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise SeriesError("times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def truncate(self, as_of: float) -> "TimeSeries":
        """Keep observations with time <= as_of."""
        keep = self.times <= as_of
        if not keep.any():
            raise SeriesError(f"no observations at or before {as_of}")
        return TimeSeries(self.times[keep], self.values[keep], self.label)

    def slice(self, start: int, stop: int | None = None) -> "TimeSeries":
        return TimeSeries(self.times[start:stop], self.values[start:stop], self.label)


@dataclass(frozen=True)
class TrendLine:
    slope: float
    intercept: float
    reference_year: float

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise SeriesError("trend slope and intercept must be finite")


_ISO = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def decimal_year(d: date) -> float:
    start = date(d.year, 1, 1)
    days_in_year = (date(d.year + 1, 1, 1) - start).days
    return d.year + (d.toordinal() - start.toordinal()) / days_in_year


def parse_time(text: str) -> float:
    text = text.strip()
    if _ISO.match(text):
        return decimal_year(date.fromisoformat(text))
    t = float(text)
    if not math.isfinite(t):
        raise ValueError(f"non-finite time {text!r}")
    return t


def ingest_csv(text, label: str = "") -> TimeSeries:
    """Parse a ``date,value`` CSV (string or file-like) into a sorted series."""
    if not isinstance(text, str):
        text = text.read()
    reader = csv.reader(io.StringIO(text))
    rows = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if not header_seen:
            header_seen = True
            if [c.strip().lower() for c in row] == ["date", "value"]:
                continue
        if len(row) != 2:
            raise SeriesError(f"line {lineno}: expected 2 columns, got {len(row)}")
        try:
            t = parse_time(row[0])
            v = float(row[1])
        except ValueError as exc:
            raise SeriesError(f"line {lineno}: {exc}") from None
        if not math.isfinite(v):
            raise SeriesError(f"line {lineno}: non-finite value {row[1]!r}")
        rows.append((t, v, lineno))
    if not rows:
        raise SeriesError("empty input")
    rows.sort(key=lambda r: r[0])
    for prev, cur in zip(rows, rows[1:]):
        if cur[0] == prev[0]:
            raise SeriesError(
                f"duplicate timestamp {cur[0]!r} (lines {prev[2]} and {cur[2]})"
            )
    return TimeSeries([r[0] for r in rows], [r[1] for r in rows], label)


def to_csv(series: TimeSeries) -> str:
    out = ["date,value"]
    for t, v in zip(series.times, series.values):
        out.append(f"{t:.6f},{float(v)!r}")
    return "\n".join(out) + "\n"


def read_series(path, label: str | None = None) -> TimeSeries:
    with open(path, newline="") as fh:
        return ingest_csv(fh.read(), label=str(path) if label is None else label)


def to_log(series: TimeSeries) -> TimeSeries:
    bad = np.flatnonzero(series.values <= 0)
    if bad.size:
        raise SeriesError(
            f"log of non-positive value {series.values[bad[0]]} at t={series.times[bad[0]]}"
        )
    return TimeSeries(series.times, np.log(series.values), series.label)


def annualized_return(v0: float, v1: float, years: float) -> float:
    """Constant yearly growth rate turning ``v0`` into ``v1`` over ``years``."""
    if v0 <= 0 or v1 <= 0 or years <= 0:
        raise SeriesError("annualized_return needs v0 > 0, v1 > 0, years > 0")
    return (v1 / v0) ** (1.0 / years) - 1.0


def align(a: TimeSeries, b: TimeSeries, mode: str = "intersect"):
    """Pair two series on common timestamps.

    Returns ``(times, a_values, b_values)``. ``intersect`` keeps exactly equal
    timestamps; ``interpolate_onto_a`` evaluates ``b`` linearly at ``a.times``.
    """
    if mode == "intersect":
        common, ia, ib = np.intersect1d(a.times, b.times, return_indices=True)
        if common.size == 0:
            raise SeriesError("empty intersection of timestamps")
        return common, a.values[ia], b.values[ib]
    if mode == "interpolate_onto_a":
        if a.times[0] < b.times[0] or a.times[-1] > b.times[-1]:
            raise SeriesError(
                f"extrapolation needed: a spans [{a.times[0]}, {a.times[-1]}], "
                f"b spans [{b.times[0]}, {b.times[-1]}]"
            )
        return a.times.copy(), a.values.copy(), np.interp(a.times, b.times, b.values)
    raise ValueError(f"unknown align mode {mode!r}")


def ratio_series(numerator: TimeSeries, denominator: TimeSeries) -> TimeSeries:
    """100 * numerator / denominator on shared timestamps (percent)."""
    try:
        t, num, den = align(numerator, denominator, "intersect")
    except SeriesError:
        raise SeriesError("numerator and denominator do not overlap") from None
    zero = np.flatnonzero(den == 0)
    if zero.size:
        raise SeriesError(f"zero denominator at t={t[zero[0]]}")
    label = f"{numerator.label}/{denominator.label}" if numerator.label else ""
    return TimeSeries(t, 100.0 * num / den, label)


def linear_trend(series: TimeSeries) -> TrendLine:
    """Ordinary least squares line, anchored at the first timestamp."""
    if len(series) < 2:
        raise SeriesError("linear_trend needs at least 2 points")
    ref = float(series.times[0])
    x = series.times - ref
    if np.ptp(x) == 0:
        raise SeriesError("all timestamps equal")
    xm, ym = x.mean(), series.values.mean()
    dx = x - xm
    slope = float(np.dot(dx, series.values - ym) / np.dot(dx, dx))
    return TrendLine(slope, float(ym - slope * xm), ref)


def extrapolate(trend: TrendLine, t: float) -> float:
    return trend.intercept + trend.slope * (t - trend.reference_year)
