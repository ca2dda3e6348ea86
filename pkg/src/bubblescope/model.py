"""Super-exponential log-periodic model of log-price.

    ln p(t) = A + B f + f (C1 cos(w g) + C2 sin(w g)),
    f = (tc - t)^m,  g = ln(tc - t)

For fixed (tc, m, w) the model is linear in (A, B, C1, C2), which is what
``subordinate_linear`` exploits.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .series import TimeSeries

#: Minimum distance (years) between an evaluation time and tc.
TC_GUARD = 1e-9
#: Smallest window accepted by the linear solve (twice the parameter count).
MIN_POINTS = 8


class DomainError(ValueError):
    """Evaluation at or too close to the critical time."""


class DegenerateDesign(ValueError):
    """The linear basis is rank deficient for the given nonlinear parameters."""


@dataclass(frozen=True)
class LpplsParams:
    tc: float
    m: float
    omega: float
    A: float
    B: float
    C1: float
    C2: float

    @property
    def C(self) -> float:
        return math.hypot(self.C1, self.C2)

    @property
    def phase(self) -> float:
        return math.atan2(self.C2, self.C1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LpplsParams":
        return cls(**{k: float(d[k]) for k in ("tc", "m", "omega", "A", "B", "C1", "C2")})


def _check_domain(tc, t):
    t = np.asarray(t, dtype=float)
    dt = tc - t
    if np.any(dt < TC_GUARD):
        bad = t[np.argmin(dt)] if t.ndim else t
        raise DomainError(f"evaluation at t={float(bad)} not below tc={tc} (guard {TC_GUARD})")
    return dt


def lppls_value(params: LpplsParams, t):
    """Model log-price at ``t`` (scalar or array)."""
    dt = _check_domain(params.tc, t)
    f = dt ** params.m
    g = np.log(dt)
    out = params.A + params.B * f + f * (
        params.C1 * np.cos(params.omega * g) + params.C2 * np.sin(params.omega * g)
    )
    return float(out) if np.ndim(out) == 0 else out


def lppls_series(params: LpplsParams, times) -> TimeSeries:
    times = np.asarray(times, dtype=float)
    label = "lppls(" + ", ".join(f"{k}={v:.6g}" for k, v in params.to_dict().items()) + ")"
    return TimeSeries(times, lppls_value(params, times), label)


def design_matrix(tc: float, m: float, omega: float, times) -> np.ndarray:
    """Columns {1, f, f cos(w g), f sin(w g)} evaluated at ``times``."""
    dt = _check_domain(tc, times)
    f = dt ** m
    wg = omega * np.log(dt)
    return np.column_stack([np.ones_like(f), f, f * np.cos(wg), f * np.sin(wg)])


def subordinate_linear(tc: float, m: float, omega: float, series: TimeSeries):
    """Solve (A, B, C1, C2) by least squares for fixed (tc, m, omega).

    ``series`` holds log-prices. Returns ``(A, B, C1, C2, sse)``.
    """
    n = len(series)
    if n < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points, got {n}")
    X = design_matrix(tc, m, omega, series.times)
    y = series.values
    # column scaling keeps the rank test meaningful when f spans decades
    scale = np.sqrt((X * X).sum(axis=0))
    if np.any(scale == 0) or not np.all(np.isfinite(X)):
        raise DegenerateDesign("basis column vanishes or overflows")
    coef, _, rank, sv = np.linalg.lstsq(X / scale, y, rcond=None)
    if rank < 4 or sv[-1] < 1e-10 * sv[0]:
        raise DegenerateDesign(
            f"basis rank deficient at tc={tc}, m={m}, omega={omega} (rank {rank})"
        )
    coef = coef / scale
    resid = y - X @ coef
    A, B, C1, C2 = (float(c) for c in coef)
    return A, B, C1, C2, float(resid @ resid)


def sse(params: LpplsParams, series: TimeSeries) -> float:
    r = series.values - lppls_value(params, series.times)
    return float(np.dot(r, r))


def profile_sse(tc: float, m: float, omega: float, times: np.ndarray, y: np.ndarray) -> float:
    """sse with (A, B, C1, C2) solved out; fast path for optimisers.

    Uses the normal equations on the column-scaled basis. Returns ``inf``
    where the basis is singular or tc is not above every time. Final fits
    should be re-solved with :func:`subordinate_linear`.
    """
    dt = tc - times
    if dt[-1] < TC_GUARD:
        return math.inf
    lg = np.log(dt)
    X = np.empty((times.size, 4))
    X[:, 0] = 1.0
    X[:, 1] = np.exp(m * lg)
    wg = omega * lg
    np.cos(wg, out=X[:, 2])
    np.sin(wg, out=X[:, 3])
    X[:, 2] *= X[:, 1]
    X[:, 3] *= X[:, 1]
    X /= np.sqrt(np.einsum("ij,ij->j", X, X))
    try:
        coef = np.linalg.solve(X.T @ X, X.T @ y)
    except np.linalg.LinAlgError:
        return math.inf
    r = y - X @ coef
    s = float(r @ r)
    return s if math.isfinite(s) else math.inf
