"""Self-excited point process with exponential kernel.

    lambda(t) = mu + sum_{t_i < t} alpha * exp(-beta (t - t_i))

The branching ratio ``n = alpha / beta`` is the mean number of events
directly triggered by one event, i.e. the endogenous share of activity.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit
from scipy.optimize import minimize

MIN_EVENTS = 20
LOG_BOX = 50.0  # |log parameter| limit; keeps exp() away from 0 and inf


@dataclass(frozen=True)
class EventSeries:
    event_times: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.array(self.event_times, dtype=float).ravel()
        if not math.isfinite(self.horizon) or self.horizon < 0:
            raise ValueError("horizon must be finite and >= 0")
        if not np.all(np.isfinite(t)):
            raise ValueError("event times must be finite")
        if t.size and (t[0] < 0 or t[-1] > self.horizon):
            raise ValueError(f"event times must lie in [0, {self.horizon}]")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("event times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "event_times", t)
        object.__setattr__(self, "horizon", float(self.horizon))

    def __len__(self):
        return self.event_times.size


@dataclass(frozen=True)
class HawkesFit:
    mu: float
    alpha: float
    beta: float
    loglik: float = math.nan

    @property
    def branching_ratio(self) -> float:
        return self.alpha / self.beta

    @property
    def stationarity_warning(self) -> bool:
        return self.branching_ratio >= 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["branching_ratio"] = self.branching_ratio
        d["stationarity_warning"] = self.stationarity_warning
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesFit":
        return cls(float(d["mu"]), float(d["alpha"]), float(d["beta"]), float(d.get("loglik", math.nan)))


@dataclass(frozen=True)
class HawkesConfig:
    starts: int = 8
    seed: int = 0
    max_iterations: int = 4000
    # longest kernel memory 1/beta, as a fraction of the horizon; slower
    # kernels never decay inside the sample and leave alpha/beta unidentified
    max_memory: float = 0.1

    def __post_init__(self):
        if self.starts < 1 or self.max_iterations < 1:
            raise ValueError("starts and max_iterations must be >= 1")
        if not 0 < self.max_memory <= 1:
            raise ValueError("max_memory must lie in (0, 1]")


def _check_params(mu, alpha, beta):
    if not (mu > 0 and beta > 0 and alpha >= 0):
        raise ValueError(f"need mu > 0, beta > 0, alpha >= 0; got {(mu, alpha, beta)}")


def simulate_hawkes(mu: float, alpha: float, beta: float, horizon: float, seed=0) -> EventSeries:
    """Ogata thinning; uses ``np.random.Generator(PCG64(seed))``."""
    _check_params(mu, alpha, beta)
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    gen = np.random.Generator(np.random.PCG64(seed))
    events = []
    t = 0.0
    excite = 0.0  # sum of kernel terms at time t
    while True:
        bound = mu + excite  # intensity only decays until the next event
        w = gen.exponential(1.0 / bound)
        t += w
        if t > horizon:
            break
        excite *= math.exp(-beta * w)
        if gen.random() * bound <= mu + excite:
            events.append(t)
            excite += alpha
    return EventSeries(np.array(events), horizon)


@njit(cache=True)
def _recursion(times, beta):
    r = np.zeros(times.size)
    for i in range(1, times.size):
        r[i] = math.exp(-beta * (times[i] - times[i - 1])) * (r[i - 1] + 1.0)
    return r


@njit(cache=True)
def _loglik(times, horizon, mu, alpha, beta):
    ll = -mu * horizon
    r = 0.0
    for i in range(times.size):
        if i > 0:
            r = math.exp(-beta * (times[i] - times[i - 1])) * (r + 1.0)
        lam = mu + alpha * r
        if lam <= 0.0:
            return -np.inf
        ll += math.log(lam) + (alpha / beta) * math.expm1(-beta * (horizon - times[i]))
    return ll


def excitation_sums(events: EventSeries, beta: float) -> np.ndarray:
    """R_i = sum_{j<i} exp(-beta (t_i - t_j)) via the O(N) recursion."""
    return _recursion(np.ascontiguousarray(events.event_times), float(beta))


def hawkes_loglik(mu: float, alpha: float, beta: float, events: EventSeries) -> float:
    _check_params(mu, alpha, beta)
    return float(_loglik(np.ascontiguousarray(events.event_times), events.horizon,
                         float(mu), float(alpha), float(beta)))


@njit(cache=True)
def _integrated_kernel(times, beta):
    # S_i = sum_{j<i} (1 - exp(-beta (t_i - t_j))), accumulated without the
    # i - R_i cancellation that ruins small beta
    s = np.zeros(times.size)
    for i in range(1, times.size):
        q = -math.expm1(-beta * (times[i] - times[i - 1]))
        s[i] = (1.0 - q) * s[i - 1] + i * q
    return s


def compensator(fit: HawkesFit, events: EventSeries) -> np.ndarray:
    """Integrated intensity Lambda(t_i) at each event time."""
    t = np.ascontiguousarray(events.event_times)
    if t.size == 0:
        return np.zeros(0)
    return fit.mu * t + fit.alpha / fit.beta * _integrated_kernel(t, float(fit.beta))


def _starts(events: EventSeries, config: HawkesConfig):
    gen = np.random.Generator(np.random.PCG64(config.seed))
    rate = len(events) / events.horizon
    out = []
    for _ in range(config.starts):
        n0 = gen.uniform(0.05, 0.95)
        beta0 = rate * math.exp(gen.uniform(math.log(0.1), math.log(10.0)))
        beta0 = max(beta0, 2.0 / (config.max_memory * events.horizon))
        out.append(np.log([rate * (1 - n0), n0 * beta0, beta0]))
    return out


def fit_hawkes(events: EventSeries, config: HawkesConfig = HawkesConfig()) -> HawkesFit:
    """Maximum likelihood by multi-start Nelder-Mead over log(mu, alpha, beta)."""
    if len(events) < MIN_EVENTS:
        raise ValueError(f"need at least {MIN_EVENTS} events, got {len(events)}")
    t = np.ascontiguousarray(events.event_times)
    H = events.horizon
    log_beta_min = -math.log(config.max_memory * H)

    def nll(x):
        if np.any(np.abs(x) > LOG_BOX) or x[2] < log_beta_min:
            return 1e300
        mu, alpha, beta = np.exp(x)
        v = _loglik(t, H, mu, alpha, beta)
        return -v if np.isfinite(v) else 1e300

    best = None
    for x0 in _starts(events, config):
        res = minimize(nll, x0, method="Nelder-Mead",
                       options={"maxiter": config.max_iterations, "xatol": 1e-8, "fatol": 1e-10})
        # restart once from the optimum; Nelder-Mead can stall on a flat ridge
        res = minimize(nll, res.x, method="Nelder-Mead",
                       options={"maxiter": config.max_iterations, "xatol": 1e-10, "fatol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res

    rate = len(events) / H
    poisson_ll = len(events) * math.log(rate) - rate * H
    mu, alpha, beta = (float(v) for v in np.exp(best.x))
    if not -best.fun > poisson_ll:
        return HawkesFit(rate, 0.0, beta, poisson_ll)
    return HawkesFit(mu, alpha, beta, float(-best.fun))


def ingest_events(text, horizon: float | None = None) -> EventSeries:
    """One-column CSV of event times.

    An optional ``time`` header is skipped. A comment line ``# horizon=H``
    sets the horizon unless given explicitly; otherwise the last event time
    is used.
    """
    if not isinstance(text, str):
        text = text.read()
    times = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip():
            continue
        cell = row[0].strip()
        if cell.startswith("#"):
            key, _, val = cell.lstrip("#").partition("=")
            if key.strip() == "horizon" and horizon is None:
                horizon = float(val)
            continue
        if cell.lower() == "time" and not times:
            continue
        if len(row) != 1:
            raise ValueError(f"line {lineno}: expected one column")
        try:
            times.append(float(cell))
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {cell!r}") from None
    if not times:
        raise ValueError("no events in input")
    times = np.sort(np.array(times))
    if horizon is None:
        horizon = float(times[-1])
    return EventSeries(times, horizon)


def events_to_csv(events: EventSeries) -> str:
    lines = [f"# horizon={events.horizon!r}", "time"]
    lines += [repr(float(t)) for t in events.event_times]
    return "\n".join(lines) + "\n"
