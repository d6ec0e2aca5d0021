import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from minbvqa.evaluation import (
    DegenerateCorrelationWarning,
    average_ranks,
    fit_logistic,
    logistic4,
    pearson,
    plcc_with_logistic,
    srcc,
)


def _tied_vectors(rng, n):
    # few distinct values so ties are common
    levels = int(rng.integers(2, 8))
    a = rng.integers(0, levels, n).astype(float)
    b = rng.normal(size=n).round(int(rng.integers(0, 3)))
    return a, b


def test_matches_oracle_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(2, 51))
        a, b = _tied_vectors(rng, n)
        if np.ptp(a) == 0 or np.ptp(b) == 0:
            continue
        assert abs(srcc(a, b) - oracles.spearman(a, b)) <= 1e-12
        assert abs(pearson(a, b) - oracles.pearson(a, b)) <= 1e-12


def test_average_ranks_match_counting():
    x = [3.0, 1.0, 3.0, 2.0, 3.0, 1.0]
    assert average_ranks(x).tolist() == oracles.ranks(x) == [5.0, 1.5, 5.0, 3.0, 5.0, 1.5]


def test_monotone_and_reversal():
    t = np.array([1.0, 5.0, 2.0, 9.0, 4.0])
    assert srcc(np.exp(t), t) == pytest.approx(1.0, abs=1e-15)
    assert srcc(-t ** 3, t) == pytest.approx(-1.0, abs=1e-15)


@settings(max_examples=60)
@given(st.integers(0, 2 ** 31))
def test_srcc_invariant_under_monotone_maps(seed):
    rng = np.random.default_rng(seed)
    p, t = rng.normal(size=20), rng.normal(size=20)

    def pwl(v):
        # strictly increasing piecewise-linear map spanning the data
        inner = np.sort(rng.uniform(v.min(), v.max(), 4))
        knots = np.concatenate([[v.min() - 1], inner, [v.max() + 1]])
        vals = np.cumsum(rng.uniform(0.1, 3, knots.size))
        return np.interp(v, knots, vals)

    g, h = pwl(p), pwl(t)
    if len(set(g)) == len(g) and len(set(h)) == len(h):
        assert srcc(g, h) == pytest.approx(srcc(p, t), abs=1e-12)


def test_zero_variance_is_null_with_warning():
    with pytest.warns(DegenerateCorrelationWarning):
        assert math.isnan(srcc([1, 1, 1], [1, 2, 3]))
    with pytest.warns(DegenerateCorrelationWarning):
        assert math.isnan(pearson([1, 2, 3], [4, 4, 4]))


def test_length_checks():
    with pytest.raises(ValueError):
        srcc([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        srcc([1], [1])


TRUE = (80.0, 10.0, 0.3, 0.7)


def test_exact_logistic_recovered():
    x = np.linspace(-3, 3, 40)
    y = logistic4(x, TRUE)
    fit = fit_logistic(x, y)
    np.testing.assert_allclose(fit(x), y, atol=1e-6)
    value, fit2 = plcc_with_logistic(x, y)
    assert abs(value - 1.0) <= 1e-12 and not fit2.fallback


def test_identity_predictions():
    t = np.random.default_rng(1).normal(size=30)
    value, _ = plcc_with_logistic(t, t)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_mapping_helps_nonlinear_predictor():
    t = np.random.default_rng(2).uniform(0, 100, 60)
    p = np.exp(t / 20)
    mapped, fit = plcc_with_logistic(p, t)
    assert mapped > pearson(p, t)
    assert not fit.fallback


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_mapping_never_lowers_plcc(seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=25)
    t = p + rng.normal(scale=rng.uniform(0.1, 3), size=25)
    mapped, fit = plcc_with_logistic(p, t)
    assert mapped >= pearson(p, t) - 1e-9
    xs = np.linspace(p.min() - 1, p.max() + 1, 200)
    d = np.diff(fit(xs))
    assert np.all(d >= 0) or np.all(d <= 0)


def test_constant_predictions_give_null():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        value, fit = plcc_with_logistic(np.ones(6), np.arange(6.0))
    assert math.isnan(value) and fit is None


def test_logistic_needs_five_points():
    with pytest.raises(ValueError):
        plcc_with_logistic([1, 2, 3, 4], [1, 2, 3, 4])
