import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubblescope.model import (
    DegenerateDesign,
    DomainError,
    LpplsParams,
    design_matrix,
    lppls_series,
    lppls_value,
    profile_sse,
    sse,
    subordinate_linear,
)
from bubblescope.series import TimeSeries


def P(**kw):
    base = dict(tc=10.0, m=0.5, omega=10.0, A=0.0, B=0.0, C1=0.0, C2=0.0)
    base.update(kw)
    return LpplsParams(**base)


def test_value_at_unit_distance():
    p = P(A=1, B=-0.5, C1=0.1, C2=0.7)
    assert lppls_value(p, 9.0) == pytest.approx(0.6, abs=1e-15)


def test_value_constant_when_no_power_terms():
    p = P(A=3.25)
    assert np.all(lppls_value(p, np.array([0.0, 5.0, 9.9])) == 3.25)


def test_value_integer_root():
    assert lppls_value(P(A=2, B=-1), 6.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("t", [10.0, 11.0, 10.0 - 1e-10])
def test_value_domain(t):
    with pytest.raises(DomainError):
        lppls_value(P(), t)


def test_series_keeps_times():
    times = np.array([1.0, 2.0, 3.0])
    s = lppls_series(P(A=1.5), times)
    np.testing.assert_array_equal(s.times, times)
    np.testing.assert_array_equal(s.values, 1.5)
    assert "tc=10" in s.label


def _mp_value(p, t):
    mpmath.mp.dps = 50
    dt = mpmath.mpf(p.tc) - mpmath.mpf(t)
    f = dt ** mpmath.mpf(p.m)
    g = mpmath.log(dt)
    w = mpmath.mpf(p.omega)
    return p.A + p.B * f + f * (p.C1 * mpmath.cos(w * g) + p.C2 * mpmath.sin(w * g))


def test_series_matches_extended_precision():
    gen = np.random.default_rng(7)
    for _ in range(10):
        p = LpplsParams(
            tc=2008 + gen.uniform(0.1, 2), m=gen.uniform(0.1, 0.9), omega=gen.uniform(2, 25),
            A=gen.normal(5, 1), B=-gen.uniform(0.1, 2), C1=gen.normal(0, 0.1), C2=gen.normal(0, 0.1),
        )
        times = np.sort(gen.uniform(2000, 2008, 25))
        got = lppls_series(p, times).values
        want = np.array([float(_mp_value(p, t)) for t in times])
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


# subordination ---------------------------------------------------------------

TIMES = np.linspace(2004, 2008, 200)


def test_subordinate_exact_recovery():
    p = LpplsParams(2008.5, 0.4, 7.0, 4.2, -0.8, 0.05, -0.07)
    s = lppls_series(p, TIMES)
    A, B, C1, C2, e = subordinate_linear(p.tc, p.m, p.omega, s)
    np.testing.assert_allclose([A, B, C1, C2], [p.A, p.B, p.C1, p.C2], rtol=1e-9, atol=1e-10)
    assert e < 1e-18 * float(s.values @ s.values)


def test_subordinate_beats_coefficient_grid():
    p = LpplsParams(2008.5, 0.4, 7.0, 4.2, -0.8, 0.05, -0.07)
    noise = np.random.default_rng(1).normal(0, 0.02, TIMES.size)
    s = TimeSeries(TIMES, lppls_value(p, TIMES) + noise)
    *_, best = subordinate_linear(p.tc, p.m, p.omega, s)

    # brute force: 20^4 coefficient grid around the truth
    X = design_matrix(p.tc, p.m, p.omega, TIMES)
    axes = [np.linspace(c - 0.1, c + 0.1, 20) for c in (p.A, p.B, p.C1, p.C2)]
    coefs = np.array(list(itertools.product(*axes)))
    resid = s.values[None, :] - coefs @ X.T
    grid = np.einsum("ij,ij->i", resid, resid)
    assert best <= grid.min()


def test_subordinate_needs_eight_points():
    s = TimeSeries(np.arange(7.0), np.ones(7))
    with pytest.raises(ValueError, match="at least 8"):
        subordinate_linear(10.0, 0.5, 8.0, s)


def test_subordinate_degenerate_design():
    # omega * ln(tc - t) constant across points when tc is far away: the
    # cos/sin columns become proportional to f
    times = np.linspace(0, 1e-9, 10)
    s = TimeSeries(times, np.arange(10.0))
    with pytest.raises(DegenerateDesign):
        subordinate_linear(1e6, 0.5, 3.0, s)


def test_residuals_orthogonal_to_basis():
    gen = np.random.default_rng(3)
    s = TimeSeries(TIMES, gen.normal(size=TIMES.size).cumsum() * 0.05 + 4)
    tc, m, w = 2008.7, 0.6, 9.0
    A, B, C1, C2, _ = subordinate_linear(tc, m, w, s)
    X = design_matrix(tc, m, w, TIMES)
    r = s.values - X @ np.array([A, B, C1, C2])
    for col in X.T:
        assert abs(col @ r) <= 1e-8 * np.linalg.norm(col) * np.linalg.norm(s.values)


def test_profile_sse_matches_subordinate():
    gen = np.random.default_rng(4)
    s = TimeSeries(TIMES, gen.normal(size=TIMES.size) * 0.1 + 3)
    for tc, m, w in [(2008.1, 0.3, 5.0), (2009.5, 0.8, 20.0), (2008.001, 0.5, 2.0)]:
        want = subordinate_linear(tc, m, w, s)[4]
        assert profile_sse(tc, m, w, s.times, s.values) == pytest.approx(want, rel=1e-8)
    assert profile_sse(2008.0, 0.5, 8.0, s.times, s.values) == math.inf


# sse -------------------------------------------------------------------------

def test_sse_zero_on_generating_params():
    p = LpplsParams(2008.5, 0.4, 7.0, 4.2, -0.8, 0.05, -0.07)
    s = lppls_series(p, TIMES)
    assert sse(p, s) <= 1e-18 * float(s.values @ s.values)


def test_sse_matches_naive_loop():
    gen = np.random.default_rng(5)
    for _ in range(10):
        p = LpplsParams(2008 + gen.uniform(0.1, 1), gen.uniform(0.1, 0.9), gen.uniform(2, 25),
                        gen.normal(), gen.normal(), gen.normal(0, 0.1), gen.normal(0, 0.1))
        times = np.sort(gen.uniform(2000, 2008, 40))
        values = gen.normal(size=40)
        total = 0.0
        for t, v in zip(times, values):
            total += (v - lppls_value(p, float(t))) ** 2
        assert sse(p, TimeSeries(times, values)) == pytest.approx(total, rel=1e-12)
        perm = gen.permutation(40)
        r = values[perm] - lppls_value(p, times[perm])
        assert float(r @ r) == pytest.approx(total, rel=1e-12)


# shape properties ------------------------------------------------------------

@given(st.floats(0.05, 0.95), st.floats(-5, -0.01))
def test_pure_power_law_rises(m, B):
    p = P(m=m, B=B)
    v = lppls_value(p, np.linspace(0, 9.99, 300))
    assert np.all(np.diff(v) > 0)


@given(st.floats(0.1, 0.9), st.floats(-3, -0.1), st.floats(0.05, 5))
def test_power_term_derivative(m, B, dist):
    p = P(m=m, B=B)
    t = p.tc - dist
    h = 1e-6 * dist
    fd = (lppls_value(p, t + h) - lppls_value(p, t - h)) / (2 * h)
    exact = -B * m * dist ** (m - 1)
    assert fd == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("m", [0.2, 0.5, 0.8])
def test_slope_diverges_near_tc(m):
    p = P(m=m, B=-1.0)

    def slope(dist, h):
        t = p.tc - dist
        return (lppls_value(p, t + h) - lppls_value(p, t - h)) / (2 * h)

    assert slope(1e-4, 1e-7) > slope(1e-2, 1e-5)
