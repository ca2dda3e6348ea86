"""Multi-start calibration, fit qualification, window ensembles and scans."""
from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .model import DegenerateDesign, DomainError, LpplsParams, lppls_value, profile_sse, subordinate_linear
from .series import TimeSeries, to_log

log = logging.getLogger(__name__)

VALID = "Valid"
NO_BUBBLE = "NoBubble"
REJECTED = "Rejected"


@dataclass(frozen=True)
class FitConfig:
    tc_max_frac: float = 0.5
    m_bounds: tuple = (0.1, 0.9)
    omega_bounds: tuple = (2.0, 25.0)
    starts: int = 50
    seed: int = 0
    max_iterations: int = 500
    tol: float = 1e-10
    min_points: int = 30
    # qualification
    pin_tol: float = 1e-3
    max_osc_ratio: float = 1.0
    min_b_amplitude: float = 1e-3
    # residual-bootstrap refits per Valid ensemble member (0 disables)
    bootstrap: int = 20
    workers: int = 1

    def __post_init__(self):
        for name in ("m_bounds", "omega_bounds"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be a non-empty interval, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if not self.tc_max_frac > 0:
            raise ValueError("tc_max_frac must be positive")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["m_bounds"] = list(self.m_bounds)
        d["omega_bounds"] = list(self.omega_bounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        d = dict(d)
        for k in ("m_bounds", "omega_bounds"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class FitResult:
    params: LpplsParams
    sse: float
    window: tuple
    n_points: int
    status: str
    reason: str = ""
    start_index: int = -1
    bootstrap_tc: tuple = ()

    @property
    def valid(self) -> bool:
        return self.status == VALID

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "sse": self.sse,
            "window": list(self.window),
            "n_points": self.n_points,
            "status": self.status,
            "reason": self.reason,
            "start_index": self.start_index,
            "bootstrap_tc": list(self.bootstrap_tc),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            params=LpplsParams.from_dict(d["params"]),
            sse=float(d["sse"]),
            window=tuple(d["window"]),
            n_points=int(d["n_points"]),
            status=d["status"],
            reason=d.get("reason", ""),
            start_index=int(d.get("start_index", -1)),
            bootstrap_tc=tuple(float(t) for t in d.get("bootstrap_tc", ())),
        )


@dataclass(frozen=True)
class CriticalWindow:
    lower: float
    upper: float
    confidence: float = 0.8
    n_fits: int = 0

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError("lower must not exceed upper")

    def contains(self, t: float) -> bool:
        return self.lower <= t <= self.upper

    def to_dict(self) -> dict:
        return asdict(self)


def search_bounds(window: tuple, config: FitConfig):
    """Box for (tc, m, omega) given the calibration window ``(t1, t2)``."""
    t1, t2 = window
    length = t2 - t1
    tc_lo = t2 + max(1e-6 * length, 1e-8)
    tc_hi = t2 + config.tc_max_frac * length
    return np.array([[tc_lo, tc_hi], config.m_bounds, config.omega_bounds])


def qualify(fit: FitResult, config: FitConfig):
    """Return ``(status, reason)`` for a candidate fit."""
    p = fit.params
    if not all(math.isfinite(v) for v in (*p.to_dict().values(), fit.sse)):
        return REJECTED, "non-finite"
    t1, t2 = fit.window
    m_lo, m_hi = config.m_bounds
    w_lo, w_hi = config.omega_bounds
    if not (m_lo + config.pin_tol < p.m < m_hi - config.pin_tol):
        return NO_BUBBLE, "m at bound"
    length = t2 - t1
    if p.tc <= t2 or p.tc > t2 + config.tc_max_frac * length + 1e-9:
        return REJECTED, "tc out of range"
    # a tc stuck on either end of its search interval is not an estimate
    if not (t2 + config.pin_tol * length < p.tc < t2 + (config.tc_max_frac - config.pin_tol) * length):
        return REJECTED, "tc at bound"
    # size of the power-law move across the window, in log-price units
    amp = abs(p.B) * abs((p.tc - t1) ** p.m - (p.tc - t2) ** p.m)
    if amp < config.min_b_amplitude:
        return NO_BUBBLE, "negligible B"
    if p.B >= 0:
        return REJECTED, "B sign"
    if not (w_lo + config.pin_tol < p.omega < w_hi - config.pin_tol):
        return REJECTED, "omega at bound"
    if p.C > config.max_osc_ratio * abs(p.B):
        return REJECTED, "oscillation dominates"
    return VALID, ""


def start_points(bounds: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Scrambled Halton points spread over the search box."""
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    return qmc.scale(u, bounds[:, 0], bounds[:, 1])


class _Objective:
    """Profile sse over (tc, m, omega), normalised by the total sum of squares."""

    def __init__(self, logp: TimeSeries):
        self.times = logp.times
        self.y = logp.values
        d = self.y - self.y.mean()
        self.scale = max(float(d @ d), 1e-300)

    def __call__(self, x):
        s = profile_sse(x[0], x[1], x[2], self.times, self.y)
        return s / self.scale if math.isfinite(s) else 1e10


def _local_search(logp: TimeSeries, x0, bounds, config: FitConfig, index: int, simplex_frac=0.1):
    obj = _Objective(logp)
    width = bounds[:, 1] - bounds[:, 0]
    simplex = [x0]
    for k in range(3):
        step = np.zeros(3)
        step[k] = simplex_frac * width[k]
        # step toward the interior so the simplex is not clipped flat
        if x0[k] + step[k] > bounds[k, 1]:
            step[k] = -step[k]
        simplex.append(x0 + step)
    res = minimize(
        obj,
        x0,
        method="Nelder-Mead",
        bounds=bounds,
        options={
            "initial_simplex": np.array(simplex),
            "maxiter": config.max_iterations,
            "xatol": 1e-9,
            "fatol": config.tol,
        },
    )
    tc, m, omega = (float(v) for v in np.clip(res.x, bounds[:, 0], bounds[:, 1]))
    try:
        A, B, C1, C2, s = subordinate_linear(tc, m, omega, logp)
    except (DegenerateDesign, DomainError) as exc:
        return index, None, str(exc)
    return index, LpplsParams(tc, m, omega, A, B, C1, C2), s


def _run_start(args):
    return _local_search(*args)


def multistart(series: TimeSeries, config: FitConfig):
    """Run every local search; return candidate fits ordered by (sse, start)."""
    if len(series) < config.min_points:
        raise ValueError(f"calibration needs at least {config.min_points} points, got {len(series)}")
    logp = to_log(series)
    window = (float(series.times[0]), float(series.times[-1]))
    bounds = search_bounds(window, config)
    x0s = start_points(bounds, config.starts, config.seed)
    jobs = [(logp, x0, bounds, config, i) for i, x0 in enumerate(x0s)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            raw = list(pool.map(_run_start, jobs))
    else:
        raw = [_run_start(j) for j in jobs]

    fits = []
    for index, params, s in raw:
        if params is None:
            log.debug("start %d failed: %s", index, s)
            continue
        cand = FitResult(params, s, window, len(series), REJECTED, "", index)
        status, reason = qualify(cand, config)
        fits.append(replace(cand, status=status, reason=reason))
    fits.sort(key=lambda f: (f.sse, f.start_index))
    return fits


def calibrate(series: TimeSeries, config: FitConfig = FitConfig()) -> FitResult:
    """Best qualified fit over all starts.

    If no start qualifies, the lowest-sse fit carrying the most common
    failure reason is returned.
    """
    fits = multistart(series, config)
    if not fits:
        window = (float(series.times[0]), float(series.times[-1]))
        nan = LpplsParams(*([math.nan] * 7))
        return FitResult(nan, math.nan, window, len(series), REJECTED, "degenerate design")
    for f in fits:
        if f.valid:
            return f
    counts = Counter((f.status, f.reason) for f in fits)
    top = max(counts.values())
    # ties between reasons go to the one whose best fit ranks first
    for f in fits:
        if counts[(f.status, f.reason)] == top:
            return f


def bootstrap_tc(series: TimeSeries, fit: FitResult, config: FitConfig, n_boot: int) -> tuple:
    """Critical times refitted on residual-resampled copies of ``series``.

    Each replicate adds i.i.d. resampled residuals of ``fit`` to its fitted
    curve and runs one local search started at ``fit``. Only replicates that
    qualify as Valid contribute.
    """
    logp = to_log(series)
    p = fit.params
    fitted = lppls_value(p, logp.times)
    resid = logp.values - fitted
    resid = resid - resid.mean()
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, len(series)])))
    bounds = search_bounds(fit.window, config)
    x0 = np.clip([p.tc, p.m, p.omega], bounds[:, 0], bounds[:, 1])
    out = []
    for b in range(n_boot):
        y = fitted + resid[gen.integers(0, resid.size, resid.size)]
        rep = TimeSeries(logp.times, y)
        _, q, s = _local_search(rep, x0, bounds, config, b, simplex_frac=0.02)
        if q is None:
            continue
        cand = FitResult(q, s, fit.window, len(series), REJECTED, "", b)
        if qualify(cand, config)[0] == VALID:
            out.append(q.tc)
    return tuple(out)


def window_starts(n: int, n_windows: int) -> list:
    """Start indices: evenly spaced from 0 towards the series midpoint."""
    half = n // 2
    return [k * half // n_windows for k in range(n_windows)]


def calibrate_ensemble(series: TimeSeries, config: FitConfig = FitConfig(), n_windows: int = 5):
    """Fits over shrinking windows sharing the last observation."""
    if n_windows < 3:
        raise ValueError("n_windows must be >= 3")
    starts = window_starts(len(series), n_windows)
    if len(series) - starts[-1] < config.min_points:
        raise ValueError(
            f"series of {len(series)} points too short: shortest window keeps "
            f"{len(series) - starts[-1]} < {config.min_points}"
        )
    fits = []
    for s in starts:
        sub = series.slice(s)
        fit = calibrate(sub, config)
        if fit.valid and config.bootstrap > 0:
            fit = replace(fit, bootstrap_tc=bootstrap_tc(sub, fit, config, config.bootstrap))
        fits.append(fit)
    return fits


def critical_window(ensemble, confidence: float = 0.8) -> CriticalWindow:
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    tcs = np.array([t for f in ensemble if f.valid for t in (f.params.tc, *f.bootstrap_tc)])
    if tcs.size == 0:
        raise ValueError("no Valid fits in ensemble: interpret as NoBubble")
    lo, hi = np.quantile(tcs, [(1 - confidence) / 2, (1 + confidence) / 2], method="linear")
    return CriticalWindow(float(lo), float(hi), confidence, int(tcs.size))


def valid_fraction(ensemble) -> float:
    return sum(f.valid for f in ensemble) / len(ensemble)


def diagnose(ensemble, min_valid_fraction: float = 0.8) -> str:
    """Ensemble-level verdict: Valid when enough windows qualify."""
    if ensemble and valid_fraction(ensemble) >= min_valid_fraction:
        return VALID
    return NO_BUBBLE


@dataclass(frozen=True)
class ScanRow:
    as_of: float
    status: str
    window: CriticalWindow | None = None
    valid_fraction: float = 0.0
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of,
            "status": self.status,
            "window": None if self.window is None else self.window.to_dict(),
            "valid_fraction": self.valid_fraction,
            "message": self.message,
        }


def earliest_admissible(series: TimeSeries, config: FitConfig, n_windows: int) -> int:
    """Index of the first observation at which an ensemble can be built."""
    for n in range(config.min_points, len(series) + 1):
        if n - window_starts(n, n_windows)[-1] >= config.min_points:
            return n - 1
    raise ValueError("series too short for any ensemble")


def scan_times(series: TimeSeries, config: FitConfig, step: float, n_windows: int, end=None):
    """As-of times ``t0, t0 + step, ...`` up to ``end`` (default: last observation)."""
    if not step > 0:
        raise ValueError("step must be positive")
    t0 = float(series.times[earliest_admissible(series, config, n_windows)])
    end = float(series.times[-1]) if end is None else float(end)
    rows = int(math.floor((end - t0) / step + 1e-9)) + 1
    return [t0 + k * step for k in range(max(rows, 0))]


def diagnose_at(series, as_of, config, n_windows, confidence, min_valid_fraction=0.8) -> ScanRow:
    try:
        ens = calibrate_ensemble(series.truncate(as_of), config, n_windows)
        status = diagnose(ens, min_valid_fraction)
        frac = valid_fraction(ens)
        window = critical_window(ens, confidence) if status == VALID else None
        return ScanRow(as_of, status, window, frac)
    except ValueError as exc:
        return ScanRow(as_of, "Error", None, 0.0, str(exc))


def scan(series, config: FitConfig = FitConfig(), step: float = 0.25, n_windows: int = 5,
         confidence: float = 0.8, min_valid_fraction: float = 0.8, end=None):
    """Causal rolling diagnosis: each row only sees data up to its as-of time.

    The as-of grid starts at the first observation where an ensemble fits
    and advances by ``step`` until ``end``.
    """
    return [
        diagnose_at(series, t, config, n_windows, confidence, min_valid_fraction)
        for t in scan_times(series, config, step, n_windows, end)
    ]
