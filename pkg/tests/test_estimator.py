import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addfunc.errors import PreconditionError
from addfunc.estimator import (
    build_schedule,
    duplicate_samples,
    estimate,
    fit,
    fit_simplified,
    simplified_degree,
)
from addfunc.funcspace import MarginalFunctional, builtin_functional
from addfunc.polyapprox import remez
from addfunc.risk import simulate
from hermite_ratios import hermite_ratios

ABS = builtin_functional("abs_pow", [1])
SQUARE = builtin_functional("square")


def test_schedule_small():
    sch = build_schedule(10000, 400, 1.0)
    assert sch.L == 0
    (l, M0, K0, t0), = sch.levels
    assert M0 == pytest.approx(2.3548, abs=1e-4)
    assert t0 == pytest.approx(1.1774, abs=1e-4)
    assert K0 == 1
    assert sch.top[0] == pytest.approx(4.2919, abs=1e-4)


def test_schedule_large():
    sch = build_schedule(10**6, 10**4, 1.0)
    assert sch.L == 0
    assert sch.levels[0][1] == pytest.approx(3.0349, abs=1e-4)
    assert sch.top[0] == pytest.approx(5.2565, abs=1e-4)


def test_schedule_top_only():
    with pytest.warns(UserWarning):
        sch = build_schedule(100, 100, 1.0)
    assert sch.L == -1
    assert sch.levels == ()
    assert len(sch.intervals) == 1


def test_schedule_errors():
    with pytest.raises(PreconditionError, match="simplified"):
        build_schedule(10000, 100)
    with pytest.raises(PreconditionError):
        build_schedule(100, 101)
    with pytest.raises(PreconditionError):
        build_schedule(10000, 400, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(16, 10**7), st.data(), st.sampled_from([0.25, 0.5, 1.0, 8.0]))
def test_schedule_invariants(d, data, c):
    s = data.draw(st.integers(math.ceil(2 * math.sqrt(d)), d))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sch = build_schedule(d, s, c)
    r = math.log(s * s / d)
    for l, M, K, t in sch.levels:
        assert M == pytest.approx(2**l * math.sqrt(2 * r))
        assert K == max(1, math.floor(c * M * M / 8))
        assert t == M / 2
        assert 2**l < math.sqrt(math.log(d) / r)
    assert not 2 ** (sch.L + 1) < math.sqrt(math.log(d) / r)
    assert all(a < b for a, b in zip(sch.thresholds, sch.thresholds[1:]))


@pytest.fixture(scope="module")
def abs_fit():
    return fit(ABS, build_schedule(10000, 400, 1.0))


@pytest.fixture(scope="module")
def wide_fit():
    # two intermediate levels: d = 10**8, s = 2*10**4
    return fit(ABS, build_schedule(10**8, 2 * 10**4, 1.0))


@settings(max_examples=200)
@given(st.floats(-50, 50, allow_nan=False))
def test_selector_partition(wide_fit, v):
    t = (0.0,) + wide_fit.schedule.thresholds
    n = len(wide_fit.schedule.intervals)
    fires = [(t[l] < abs(v) <= t[l + 1]) if l < n - 1 else abs(v) > t[-1] for l in range(n)]
    if v == 0.0:
        fires[0] = True  # |v| = 0 belongs to level 0
    assert sum(fires) == 1
    assert wide_fit.select_level(np.array([v]))[0] == fires.index(True)


def test_selector_boundaries(wide_fit):
    t = np.array(wide_fit.schedule.thresholds)
    assert wide_fit.schedule.L >= 1
    assert np.array_equal(wide_fit.select_level(t), np.arange(t.size))
    assert np.array_equal(wide_fit.select_level(np.nextafter(t, np.inf)), np.arange(1, t.size + 1))


def test_duplicate_zero():
    y1, y2 = duplicate_samples(np.zeros(50), 3)
    assert np.array_equal(y1, -y2)


@settings(max_examples=30)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20), st.integers(0, 2**32))
def test_duplicate_sum(y, seed):
    y = np.array(y)
    y1, y2 = duplicate_samples(y, seed)
    # exact up to the rounding of the two additions
    assert np.all(np.abs((y1 + y2) - 2 * y) <= 4 * np.spacing(np.abs(y1) + np.abs(y2) + np.abs(y)))
    assert np.array_equal(duplicate_samples(y, seed)[0], y1)


def test_duplicate_moments():
    n = 10**5
    y = simulate(np.zeros(n), 11)
    y1, y2 = duplicate_samples(y, 12)
    assert abs(np.mean(y1 * y2) - y1.mean() * y2.mean()) <= 3 * 2 / math.sqrt(n)
    assert np.var(y1) == pytest.approx(2.0, abs=0.03)


def test_square_levels_exact():
    est = fit(SQUARE, build_schedule(10**6, 10**4, 8.0))
    assert all(p.degree >= 2 for p in est.per_level_poly)
    assert est.per_level_delta == [0.0] * len(est.per_level_poly)
    assert est.rate == 0.0


def test_fit_degree_nine():
    est = fit(ABS, build_schedule(10**6, 10**4, 8.0))
    p = est.per_level_poly[0]
    M0 = est.schedule.levels[0][1]
    assert p.degree == 9
    assert p.interval == pytest.approx((-M0, M0))
    assert p.delta == pytest.approx(M0 * remez(ABS, 9, -1, 1).delta, rel=1e-8)
    assert 0.25 < p.delta * 9 / M0 < 0.35


def test_centering_invariance():
    sch = build_schedule(10000, 400, 1.0)
    a = fit(ABS, sch)
    b = fit(ABS.shifted(-1.0), sch)
    assert b.value_at_zero == -1.0
    for p, q in zip(a.per_level_poly, b.per_level_poly):
        assert np.array_equal(p.coeffs, q.coeffs)
    y = simulate(np.zeros(10000), 5, copies=2)
    assert estimate(b, y) - estimate(a, y) == pytest.approx(-10000.0, abs=1e-9)


def test_forced_level_zero(abs_fit):
    rng = np.random.default_rng(4)
    u = rng.standard_normal(10000)
    y = np.vstack([u, np.full(10000, 0.1)])
    series = abs_fit.series[0]
    assert abs_fit.estimate(y) == pytest.approx(math.fsum(series(u)), rel=1e-12, abs=1e-9)


def test_dimension_mismatch(abs_fit):
    with pytest.raises(PreconditionError):
        abs_fit.estimate(np.zeros((2, 10)))
    dup = fit(ABS, abs_fit.schedule, "duplicate")
    with pytest.raises(PreconditionError):
        dup.estimate(np.zeros((2, 10000)))


def _mc_mean(est, theta, reps, seed=0):
    vals = np.array([est.estimate(simulate(theta, seed, r, 2 if est.noise_mode == "oracle_pairs" and est.kind == "multiscale" else 1), r) for r in range(reps)])
    return vals.mean(), vals.std() / math.sqrt(reps)


@pytest.mark.parametrize("mode", ["oracle_pairs", "duplicate"])
def test_unbiased_off_support(mode):
    est = fit(ABS, build_schedule(400, 40, 1.0), mode)
    mean, se = _mc_mean(est, np.zeros(400), 2000)
    assert abs(mean) <= 3 * se


def test_square_unbiased_single_coordinate():
    # all coordinates off-support, each term has mean zero
    est = fit(SQUARE, build_schedule(400, 40, 8.0))
    mean, se = _mc_mean(est, np.zeros(400), 2000)
    assert abs(mean) <= 3 * se


def test_exact_levels_no_bias():
    est = fit(SQUARE, build_schedule(400, 40, 8.0))
    theta = np.zeros(400)
    theta[:40] = 1.2
    mean, se = _mc_mean(est, theta, 2000)
    assert abs(mean - math.fsum(theta**2)) <= 2 * math.sqrt(est.rate) + 3 * se


def test_simplified_degree():
    assert simplified_degree(100, math.sqrt(math.log(100)), 1.0) == 4


def test_simplified_square():
    est = fit_simplified(SQUARE, 100, math.sqrt(math.log(100)))
    assert np.allclose(est.per_level_poly[0].coeffs, [0, 0, 1, 0, 0], atol=1e-9)
    y = np.linspace(-2, 2, 100)
    assert est.estimate(y) == pytest.approx(np.sum(y**2 - 1), rel=1e-9)


def test_simplified_constant():
    kappa = 2.5
    F = MarginalFunctional(lambda t: np.full(np.shape(t), kappa), "const", kappa, is_even=True)
    est = fit_simplified(F, 100, 1.0)
    y = simulate(np.zeros(100), 9)
    assert est.estimate(y) == 100 * kappa


def test_simplified_range():
    with pytest.raises(PreconditionError):
        fit_simplified(SQUARE, 100, 2.2)
    with pytest.raises(PreconditionError):
        fit_simplified(SQUARE, 100, 0.0)


def test_hermite_ratios_bounded():
    worst = hermite_ratios()
    assert max(worst.values()) <= 100
