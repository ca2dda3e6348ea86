"""Lagged Pearson correlation between two equally sampled series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import TimeSeries

MIN_OVERLAP = 8


@dataclass(frozen=True)
class LagResult:
    best_lag: int
    best_correlation: float
    lags: tuple
    curve: tuple
    differenced: bool = False

    def to_dict(self) -> dict:
        return {
            "best_lag": self.best_lag,
            "best_correlation": self.best_correlation,
            "lags": list(self.lags),
            "curve": list(self.curve),
            "differenced": self.differenced,
        }

    def to_csv(self) -> str:
        rows = ["lag,correlation"] + [f"{k},{c!r}" for k, c in zip(self.lags, self.curve)]
        return "\n".join(rows) + "\n"


def _values(x):
    return np.asarray(x.values if isinstance(x, TimeSeries) else x, dtype=float)


def standardize(series: TimeSeries) -> TimeSeries:
    """Zero mean, unit sample variance (ddof=1)."""
    v = series.values
    if v.size < 2:
        raise ValueError("standardize needs at least 2 points")
    sd = v.std(ddof=1)
    if not sd > 0:
        raise ValueError("zero variance")
    return TimeSeries(series.times, (v - v.mean()) / sd, series.label)


def difference(series: TimeSeries) -> TimeSeries:
    return TimeSeries(series.times[1:], np.diff(series.values), series.label)


def lagged_correlation(a, b, lag: int) -> float:
    """Pearson correlation of a[t] with b[t + lag] over the overlap.

    Means and variances are recomputed on the overlapping segment.
    """
    x, y = _values(a), _values(b)
    if x.size != y.size:
        raise ValueError("series must be aligned to the same length")
    n = x.size
    if lag >= 0:
        x, y = x[: n - lag], y[lag:]
    else:
        x, y = x[-lag:], y[: n + lag]
    if x.size < MIN_OVERLAP:
        raise ValueError(f"overlap of {x.size} points at lag {lag} is below {MIN_OVERLAP}")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise ValueError(f"zero variance in overlap at lag {lag}")
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def lag_scan(a, b, max_lag: int, differenced: bool = False) -> LagResult:
    """Correlation at every lag in [-max_lag, max_lag] and the strongest one.

    Positive best_lag means ``b`` follows ``a``. Ties in |corr| go to the
    smaller |lag|, then to the negative lag.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    lags = list(range(-max_lag, max_lag + 1))
    curve = [lagged_correlation(a, b, k) for k in lags]
    best = min(range(len(lags)), key=lambda i: (-abs(curve[i]), abs(lags[i]), lags[i]))
    return LagResult(lags[best], curve[best], tuple(lags), tuple(curve), differenced)
