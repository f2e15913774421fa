import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from newsvendor_ci import confint
from newsvendor_ci.confint import SampleSet
from newsvendor_ci.errors import DataError, DomainError
from newsvendor_ci.experiments import BINOMIAL_SAMPLES, EXPONENTIAL_SAMPLES, POISSON_SAMPLES


def tail_search_interval(X, n, alpha):
    """Clopper-Pearson ends as the q where a binomial tail equals (1 - alpha)/2."""
    tail = (1 - alpha) / 2
    lo = 0.0 if X == 0 else optimize.brentq(lambda q: stats.binom.sf(X - 1, n, q) - tail, 1e-12, 1 - 1e-12, xtol=1e-15)
    hi = 1.0 if X == n else optimize.brentq(lambda q: stats.binom.cdf(X, n, q) - tail, 1e-12, 1 - 1e-12, xtol=1e-15)
    return lo, hi


def test_binomial_worked_example_interval():
    iv = confint.clopper_pearson(SampleSet(BINOMIAL_SAMPLES), 50, 0.9)
    assert (iv.lb, iv.ub) == pytest.approx((0.490226, 0.565527), abs=1e-6)
    assert iv.contains(0.5)
    ref = tail_search_interval(264, 500, 0.9)
    assert iv.lb == pytest.approx(ref[0], abs=1e-10)
    assert iv.ub == pytest.approx(ref[1], abs=1e-10)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 400), st.integers(0, 400), st.floats(0.5, 0.995))
def test_clopper_pearson_matches_tail_search(n, X, alpha):
    X = min(X, n)
    lb, ub = confint.clopper_pearson_bounds(X, n, alpha)
    ref = tail_search_interval(X, n, alpha)
    assert float(lb) == pytest.approx(ref[0], abs=1e-9)
    assert float(ub) == pytest.approx(ref[1], abs=1e-9)


def test_clopper_pearson_edges():
    lb, ub = confint.clopper_pearson_bounds([0, 30], [30, 30], 0.9)
    assert lb[0] == 0.0 and ub[1] == 1.0
    with pytest.raises(NotImplementedError):
        confint.clopper_pearson(SampleSet([1, 2]), 5, 0.9, method="agresti-coull")
    with pytest.raises(DataError):
        confint.clopper_pearson(SampleSet([1, 7]), 5, 0.9)


def test_garwood_worked_example_and_chi_square_form():
    iv = confint.garwood(SampleSet(POISSON_SAMPLES), 0.9)
    assert (iv.lb, iv.ub) == pytest.approx((45.1279, 52.4896), abs=1e-4)
    lo, hi = confint.garwood_chi2_bounds(487, 10, 0.9)
    assert iv.lb == pytest.approx(lo, abs=1e-9)
    assert iv.ub == pytest.approx(hi, abs=1e-9)
    assert iv.ub == pytest.approx(stats.chi2.ppf(0.95, 976) / 20, abs=1e-9)


def test_garwood_gamma_vs_chi_square_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        total = int(rng.integers(0, 2000))
        exposure = rng.uniform(0.5, 40)
        alpha = rng.uniform(0.5, 0.99)
        lb, ub = confint.garwood_bounds(total, exposure, alpha)
        lo, hi = confint.garwood_chi2_bounds(total, exposure, alpha)
        assert abs(float(lb) - lo) <= 1e-9 and abs(float(ub) - hi) <= 1e-9


def test_garwood_zero_total():
    iv = confint.garwood(SampleSet([0, 0, 0]), 0.9)
    assert iv.lb == 0.0 and iv.ub > 0


def test_exponential_interval_and_pivot_forms():
    s = SampleSet(EXPONENTIAL_SAMPLES)
    iv = confint.exponential_interval(s, 0.9)
    lo, hi = confint.exponential_chi2_bounds(10, s.total, 0.9)
    assert (iv.lb, iv.ub) == pytest.approx((lo, hi), abs=1e-12)
    assert iv.ub == pytest.approx(stats.gamma.ppf(0.95, 10, scale=1 / s.total), rel=1e-12)
    with pytest.raises(DataError):
        confint.exponential_interval(SampleSet([0.0, 0.0]), 0.9)
    with pytest.raises(DataError):
        confint.exponential_interval(SampleSet([1.0, 2.0], [0.5, 1.0]), 0.9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 500), st.integers(0, 500), st.floats(0.5, 0.9), st.floats(0.01, 0.09))
def test_intervals_nest_in_alpha(n, X, alpha, bump):
    X = min(X, n)
    a = confint.clopper_pearson_bounds(X, n, alpha)
    b = confint.clopper_pearson_bounds(X, n, alpha + bump)
    assert b[0] <= a[0] and a[1] <= b[1]
    a = confint.garwood_bounds(X, 7.0, alpha)
    b = confint.garwood_bounds(X, 7.0, alpha + bump)
    assert b[0] <= a[0] and a[1] <= b[1]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 500), min_size=1, max_size=30), st.floats(0.01, 100))
def test_exponential_interval_scale_equivariant(samples, c):
    a = confint.exponential_interval(SampleSet(samples), 0.9)
    b = confint.exponential_interval(SampleSet(np.array(samples) * c), 0.9)
    assert b.lb == pytest.approx(a.lb / c, rel=1e-9)
    assert b.ub == pytest.approx(a.ub / c, rel=1e-9)


def test_censored_paths_reduce_to_uncensored():
    full = confint.clopper_pearson(SampleSet(BINOMIAL_SAMPLES), 50, 0.9)
    cens = confint.clopper_pearson(SampleSet(BINOMIAL_SAMPLES, [50] * 10), 50, 0.9)
    assert (full.lb, full.ub) == (cens.lb, cens.ub)
    full = confint.garwood(SampleSet(POISSON_SAMPLES), 0.9)
    cens = confint.garwood(SampleSet(POISSON_SAMPLES, [1.0] * 10), 0.9)
    assert (full.lb, full.ub) == (cens.lb, cens.ub)


def test_censored_exposure_shrinks_and_validates():
    s = SampleSet([5, 3, 4], [0.5, 1.0, 0.25])
    assert s.exposure() == pytest.approx(1.75)
    iv = confint.garwood(s, 0.9)
    assert iv.lb == pytest.approx(stats.gamma.ppf(0.05, 12, scale=1 / 1.75), rel=1e-10)
    with pytest.raises(DataError, match="observation 2"):
        SampleSet([3, 9], [10, 8]).trials(50)
    with pytest.raises(DataError):
        SampleSet([1, 2], [0.5, 1.5]).exposure()


def test_width_shrinks_with_more_data():
    rng = np.random.default_rng(8)
    widths = {}
    for M in (10, 40):
        totals = rng.binomial(50, 0.5, size=(1000, M)).sum(axis=1)
        lb, ub = confint.clopper_pearson_bounds(totals, M * 50, 0.9)
        widths[M] = float(np.mean(ub - lb))
    assert widths[40] < widths[10]


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.2])
def test_alpha_outside_open_unit_interval(alpha):
    with pytest.raises(DomainError):
        confint.garwood(SampleSet([3, 4]), alpha)


def test_sample_validation():
    with pytest.raises(DataError):
        SampleSet([])
    with pytest.raises(DataError):
        SampleSet([1, -2])
    with pytest.raises(DataError):
        SampleSet([1, 2], [1])
    with pytest.raises(DataError):
        confint.garwood(SampleSet([1.5, 2]), 0.9)
