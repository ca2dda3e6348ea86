"""Bubble diagnostics: log-periodic calibration, lead-lag and reflexivity."""
from .calibrate import (
    CriticalWindow,
    FitConfig,
    FitResult,
    calibrate,
    calibrate_ensemble,
    critical_window,
    diagnose,
    qualify,
    scan,
)
from .leadlag import LagResult, lag_scan, lagged_correlation, standardize
from .model import LpplsParams, lppls_series, lppls_value, sse, subordinate_linear
from .reflexivity import EventSeries, HawkesFit, fit_hawkes, hawkes_loglik, simulate_hawkes
from .series import (
    TimeSeries,
    TrendLine,
    align,
    annualized_return,
    extrapolate,
    ingest_csv,
    linear_trend,
    ratio_series,
    to_log,
)
from .synthetic import SynthSpec, generate_lppls, grid_oracle, recovery_trial

__version__ = "0.1.0"
