import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubblescope.calibrate import (
    NO_BUBBLE,
    REJECTED,
    VALID,
    CriticalWindow,
    FitConfig,
    FitResult,
    calibrate,
    calibrate_ensemble,
    critical_window,
    diagnose,
    earliest_admissible,
    multistart,
    qualify,
    scan,
    scan_times,
    window_starts,
)
from bubblescope.model import LpplsParams
from bubblescope.series import TimeSeries
from bubblescope.synthetic import SynthSpec, gbm_path, generate_lppls

FAST = FitConfig(starts=12, bootstrap=0)


def candidate(**kw):
    p = dict(tc=2008.5, m=0.5, omega=8.0, A=5.0, B=-0.6, C1=0.04, C2=0.03)
    p.update(kw)
    return FitResult(LpplsParams(**p), 0.1, (2004.0, 2008.0), 500, REJECTED)


# qualify -------------------------------------------------------------------

def test_qualify_passes_typical_bubble():
    assert qualify(candidate(), FitConfig()) == (VALID, "")


def test_qualify_m_near_upper_bound():
    # 0.8999 sits 1e-4 from the bound: pinned under the default 1e-3 margin
    assert qualify(candidate(m=0.8999), FitConfig()) == (NO_BUBBLE, "m at bound")
    assert qualify(candidate(m=0.8999), FitConfig(pin_tol=1e-5))[0] == VALID
    assert qualify(candidate(m=0.898), FitConfig())[0] == VALID


def test_qualify_b_sign():
    assert qualify(candidate(B=0.2), FitConfig()) == (REJECTED, "B sign")


def test_qualify_oscillation_dominates():
    c = 1.5 * 0.6 / math.sqrt(2)
    assert qualify(candidate(C1=c, C2=c), FitConfig()) == (REJECTED, "oscillation dominates")


@pytest.mark.parametrize("tc, reason", [(2008.0, "tc out of range"), (2010.5, "tc out of range"),
                                        (2008.0001, "tc at bound"), (2009.9999, "tc at bound")])
def test_qualify_tc_range(tc, reason):
    assert qualify(candidate(tc=tc), FitConfig()) == (REJECTED, reason)


def test_qualify_omega_and_negligible_b():
    assert qualify(candidate(omega=2.0), FitConfig()) == (REJECTED, "omega at bound")
    assert qualify(candidate(B=-1e-6, C1=0, C2=0), FitConfig()) == (NO_BUBBLE, "negligible B")


@given(st.floats(-1e3, 1e3), st.floats(-2, 2), st.floats(-50, 50), st.floats(-5, 5),
       st.floats(-5, 5), st.floats(-5, 5))
def test_qualify_is_total(dtc, m, omega, B, C1, C2):
    status, _ = qualify(candidate(tc=2008.0 + dtc, m=m, omega=omega, B=B, C1=C1, C2=C2), FitConfig())
    assert status in (VALID, NO_BUBBLE, REJECTED)


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(m_bounds=(0.5, 0.5))
    with pytest.raises(ValueError):
        FitConfig(starts=0)


# calibrate -----------------------------------------------------------------

def test_calibrate_recovers_noiseless(bubble, truth):
    fit = calibrate(bubble)
    assert fit.status == VALID
    assert abs(fit.params.tc - truth.tc) <= 0.02
    assert fit.sse < 1e-12
    assert fit.window == (2004.0, 2008.0) and fit.n_points == 500


def test_calibrate_pure_exponential_is_no_bubble():
    t = np.linspace(2000, 2004, 200)
    fit = calibrate(TimeSeries(t, np.exp(0.05 * t)))
    assert fit.status == NO_BUBBLE


def test_calibrate_too_short():
    with pytest.raises(ValueError, match="at least 30"):
        calibrate(TimeSeries(np.arange(10.0), np.ones(10)))


def test_multistart_independent_of_workers(bubble):
    cfg = FitConfig(starts=4, bootstrap=0)
    serial = multistart(bubble.slice(300), cfg)
    parallel = multistart(bubble.slice(300), FitConfig(starts=4, bootstrap=0, workers=2))
    assert [f.to_dict() for f in serial] == [f.to_dict() for f in parallel]


def test_calibrate_deterministic(bubble):
    a = calibrate(bubble.slice(250), FAST)
    b = calibrate(bubble.slice(250), FAST)
    assert a == b


# ensembles -----------------------------------------------------------------

def test_window_starts_spacing():
    assert window_starts(90, 3) == [0, 15, 30]


def test_ensemble_noiseless(bubble, truth):
    ens = calibrate_ensemble(bubble, FitConfig(starts=20), 5)
    assert len(ens) == 5
    assert all(f.valid for f in ens)
    assert all(abs(f.params.tc - truth.tc) <= 0.05 for f in ens)
    assert [f.window[0] for f in ens] == list(bubble.times[window_starts(500, 5)])
    assert len({f.window[1] for f in ens}) == 1


def test_ensemble_too_short():
    s = TimeSeries(np.arange(40.0), np.exp(np.arange(40.0) * 0.01))
    with pytest.raises(ValueError, match="too short"):
        calibrate_ensemble(s, FAST, 3)


def test_ensemble_spread_stable_when_doubling_windows(bubble):
    cfg = FitConfig(starts=12, bootstrap=0)
    spreads = []
    for n in (3, 6):
        w = critical_window(calibrate_ensemble(bubble, cfg, n))
        spreads.append(w.upper - w.lower)
    # noiseless spreads are at the optimiser's resolution; allow a 1e-6 y floor
    assert spreads[1] <= 2 * spreads[0] + 1e-6


# critical window -------------------------------------------------------------

def _with_tc(tcs, status=VALID):
    return [FitResult(LpplsParams(tc, 0.5, 8, 0, -1, 0, 0), 0.0, (2000.0, 2008.0), 100, status)
            for tc in tcs]


def test_critical_window_quantiles():
    tcs = 2008.1 + 0.1 * np.arange(10)
    w = critical_window(_with_tc(tcs), 0.8)
    # direct order-statistic interpolation: positions 0.9 and 8.1
    lo = tcs[0] + 0.9 * (tcs[1] - tcs[0])
    hi = tcs[8] + 0.1 * (tcs[9] - tcs[8])
    assert (w.lower, w.upper) == (pytest.approx(lo), pytest.approx(hi))
    assert (w.lower, w.upper) == (pytest.approx(2008.19), pytest.approx(2008.91))
    assert w.n_fits == 10 and w.confidence == 0.8


def test_critical_window_single_fit():
    w = critical_window(_with_tc([2008.5]))
    assert w.lower == w.upper == 2008.5


def test_critical_window_ignores_invalid_and_requires_one():
    w = critical_window(_with_tc([2008.5]) + _with_tc([2020.0], REJECTED))
    assert w.upper == 2008.5
    with pytest.raises(ValueError, match="NoBubble"):
        critical_window(_with_tc([2008.5, 2009.0], REJECTED))


def test_critical_window_pools_bootstrap():
    fits = _with_tc([2008.5])
    fits = [FitResult(**{**f.__dict__, "bootstrap_tc": (2008.0, 2009.0)}) for f in fits]
    w = critical_window(fits, 0.5)
    assert (w.lower, w.upper) == (2008.25, 2008.75)


def test_critical_window_ordering():
    with pytest.raises(ValueError):
        CriticalWindow(2.0, 1.0)


def test_diagnose_threshold():
    ens = _with_tc([2008.5] * 4) + _with_tc([2008.5], NO_BUBBLE)
    assert diagnose(ens) == VALID
    assert diagnose(ens[1:]) == NO_BUBBLE


# scan ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_bubble(truth):
    return generate_lppls(SynthSpec(truth, np.linspace(2006, 2008, 80), 0.005, 3))


def test_scan_row_count(short_bubble):
    first = short_bubble.times[earliest_admissible(short_bubble, FAST, 3)]
    span = short_bubble.times[-1] - first
    for step in (0.1, 0.37, 0.5):
        assert len(scan_times(short_bubble, FAST, step, 3)) == math.floor(span / step) + 1
    assert len(scan_times(short_bubble, FAST, 100.0, 3)) == 1


def test_scan_rejects_bad_step(short_bubble):
    with pytest.raises(ValueError):
        scan(short_bubble, FAST, 0.0, 3)


def test_scan_is_causal(short_bubble):
    cfg = FitConfig(starts=4, bootstrap=5)
    full = scan(short_bubble, cfg, 0.25, 3)
    assert len(full) >= 3
    row = full[1]
    truncated = scan(short_bubble.truncate(row.as_of), cfg, 0.25, 3, end=row.as_of)
    assert truncated[-1] == row
    assert truncated == full[:2]


def _calm_then_bubble(truth, seed):
    calm = gbm_path(np.linspace(2002, 2004, 100, endpoint=False), 0.05, 0.1, seed)
    bubble = generate_lppls(SynthSpec(truth, np.linspace(2004, 2008.3, 215), 0.01, seed))
    scale = bubble.values[0] / calm.values[-1]
    return TimeSeries(np.concatenate([calm.times, bubble.times]),
                      np.concatenate([calm.values * scale, bubble.values]))


@pytest.mark.slow
def test_scan_switches_on_before_tc(truth):
    for seed in range(4):
        rows = scan(_calm_then_bubble(truth, seed), FitConfig(starts=12, seed=seed, bootstrap=0), 0.5, 5)
        status = [r.status for r in rows]
        # the verdict settles on Valid after a NoBubble stretch, all before tc
        last_off = max(i for i, s in enumerate(status) if s == NO_BUBBLE)
        assert all(s == VALID for s in status[last_off + 1:]) and last_off + 1 < len(rows)
        assert rows[-1].as_of < truth.tc
