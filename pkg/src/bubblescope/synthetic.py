"""Ground truth for tests: synthetic bubbles and a brute-force grid calibrator.

Random numbers come from numpy's ``PCG64`` bit generator seeded with the
``SynthSpec`` seed (``np.random.Generator(np.random.PCG64(seed))``), so draws are
reproducible across platforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibrate import FitConfig, FitResult, calibrate, qualify, search_bounds
from .model import DegenerateDesign, DomainError, LpplsParams, lppls_value, subordinate_linear
from .series import TimeSeries, to_log


def rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SynthSpec:
    params: LpplsParams
    times: np.ndarray
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if t.size == 0 or t.max() >= self.params.tc:
            raise ValueError("all sampling times must lie below tc")

    def to_dict(self) -> dict:
        return {
            "kind": "lppls",
            "params": self.params.to_dict(),
            "times": [float(t) for t in self.times],
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        times = d["times"]
        if isinstance(times, dict):
            times = np.linspace(times["start"], times["stop"], int(times["n"]))
        return cls(LpplsParams.from_dict(d["params"]), times,
                   float(d.get("noise_sigma", 0.0)), int(d.get("seed", 0)))


def generate_lppls(spec: SynthSpec) -> TimeSeries:
    """Prices exp(model + eps), eps ~ N(0, noise_sigma^2) i.i.d."""
    logp = lppls_value(spec.params, spec.times)
    if spec.noise_sigma > 0:
        logp = logp + spec.noise_sigma * rng(spec.seed).standard_normal(spec.times.size)
    return TimeSeries(spec.times, np.exp(logp), f"synth-lppls-seed{spec.seed}")


def grid_nodes(bounds, resolution):
    if np.isscalar(resolution):
        resolution = (resolution,) * 3
    if min(resolution) < 3:
        raise ValueError("grid resolution must be >= 3 per axis")
    return [np.linspace(lo, hi, r) for (lo, hi), r in zip(bounds, resolution)]


def grid_sse(series: TimeSeries, bounds, resolution):
    """sse at every grid node (nan where the node is inadmissible)."""
    logp = to_log(series)
    axes = grid_nodes(bounds, resolution)
    out = np.full([a.size for a in axes], np.nan)
    for i, tc in enumerate(axes[0]):
        for j, m in enumerate(axes[1]):
            for k, w in enumerate(axes[2]):
                try:
                    out[i, j, k] = subordinate_linear(tc, m, w, logp)[4]
                except (DegenerateDesign, DomainError, ValueError):
                    pass
    return axes, out


def grid_oracle(series: TimeSeries, bounds=None, resolution=20, config: FitConfig = FitConfig()):
    """Exhaustive grid minimum of the subordinated sse; no refinement.

    ``bounds`` defaults to the calibrator's search box for this window.
    The returned ``start_index`` is the flat node index.
    """
    window = (float(series.times[0]), float(series.times[-1]))
    if bounds is None:
        bounds = search_bounds(window, config)
    axes, table = grid_sse(series, bounds, resolution)
    if np.all(np.isnan(table)):
        raise ValueError("every grid node is inadmissible")
    # nanargmin returns the first (lowest flat index) minimum
    flat = int(np.nanargmin(table))
    i, j, k = np.unravel_index(flat, table.shape)
    tc, m, w = axes[0][i], axes[1][j], axes[2][k]
    A, B, C1, C2, s = subordinate_linear(tc, m, w, to_log(series))
    cand = FitResult(LpplsParams(float(tc), float(m), float(w), A, B, C1, C2),
                     s, window, len(series), "Rejected", "", flat)
    status, reason = qualify(cand, config)
    return FitResult(cand.params, s, window, len(series), status, reason, flat)


@dataclass(frozen=True)
class RecoveryReport:
    tc_error: float
    m_error: float
    omega_error: float
    status: str
    fit: FitResult


def recovery_trial(truth: SynthSpec, config: FitConfig = FitConfig()) -> RecoveryReport:
    fit = calibrate(generate_lppls(truth), config)
    p, q = fit.params, truth.params
    return RecoveryReport(p.tc - q.tc, p.m - q.m, p.omega - q.omega, fit.status, fit)


def draw_params(seed, window=(2004.0, 2008.0), m_range=(0.2, 0.8), omega_range=(4.0, 15.0),
                tc_range=(0.05, 0.35)) -> LpplsParams:
    """Random bubble parameters that the default qualifier accepts.

    ``tc`` lies ``tc_range`` window lengths past the window end, ``B`` is
    negative and the oscillation amplitude stays below half of ``|B|``.
    """
    g = rng(seed)
    t1, t2 = window
    B = -g.uniform(0.3, 1.0)
    amp, phase = g.uniform(0.05, 0.5) * abs(B), g.uniform(0, 2 * math.pi)
    return LpplsParams(
        tc=t2 + g.uniform(*tc_range) * (t2 - t1),
        m=g.uniform(*m_range),
        omega=g.uniform(*omega_range),
        A=math.log(100) + g.uniform(0.5, 2.0),
        B=B,
        C1=amp * math.cos(phase),
        C2=amp * math.sin(phase),
    )


def gbm_path(times, drift: float, vol: float, seed, p0: float = 100.0) -> TimeSeries:
    """Geometric Brownian motion sampled at ``times`` (years)."""
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    z = rng(seed).standard_normal(dt.size)
    steps = (drift - 0.5 * vol**2) * dt + vol * np.sqrt(dt) * z
    logp = math.log(p0) + np.concatenate([[0.0], np.cumsum(steps)])
    return TimeSeries(times, np.exp(logp), f"gbm-seed{seed}")
