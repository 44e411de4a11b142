import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fsgate import preprocess as pp
from fsgate._backend import available_backends
from oracles import bisect_inverse

finite_x = st.floats(-1e3, 1e3, allow_nan=False)
lams = st.floats(-5.0, 5.0, allow_nan=False)


@pytest.mark.parametrize(
    "x,lam,expected",
    [
        (3.0, 1.0, 3.0),
        (0.0, 0.0, 0.0),
        (0.0, 2.0, 0.0),
        (0.0, -3.7, 0.0),
        (-1.0, 2.0, -math.log(2.0)),
        (1.0, 0.0, math.log(2.0)),
        (3.0, 0.5, 2.0),  # (4**0.5 - 1) / 0.5
        (-3.0, 1.5, -2.0),  # -(4**0.5 - 1) / 0.5
    ],
)
def test_hand_values(x, lam, expected):
    assert pp.yeo_johnson(x, lam) == pytest.approx(expected, rel=1e-14, abs=1e-15)


def test_lambda_one_is_exact_identity(rng):
    x = np.concatenate([np.abs(rng.normal(size=500)) * 10.0 ** rng.integers(-5, 5, 500), [0.0, 1e-300]])
    for k in available_backends().values():
        assert np.array_equal(k.yj_transform(x, 1.0), x)


@given(x=st.floats(0.0, 1e3), sign=st.sampled_from([-1.0, 1.0]))
def test_continuity_at_zero(x, sign):
    limit = pp.yeo_johnson(x, 0.0)
    assert abs(pp.yeo_johnson(x, sign * 1e-8) - limit) < 1e-6


@given(x=st.floats(-1e3, -1e-300), sign=st.sampled_from([-1.0, 1.0]))
def test_continuity_at_two(x, sign):
    limit = pp.yeo_johnson(x, 2.0)
    assert abs(pp.yeo_johnson(x, 2.0 + sign * 1e-8) - limit) < 1e-6


@given(a=finite_x, b=finite_x, lam=lams)
def test_strictly_increasing(a, b, lam):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    if hi - lo < 1e-9 * max(1.0, abs(hi)):
        return  # below what a double can resolve after the transform
    assert pp.yeo_johnson(lo, lam) < pp.yeo_johnson(hi, lam)


def test_monotone_on_1000_random_pairs(rng):
    violations = 0
    for _ in range(1000):
        lam = rng.uniform(-5, 5)
        a, b = np.sort(rng.uniform(-20, 20, 2))
        violations += not pp.yeo_johnson(a, lam) < pp.yeo_johnson(b, lam)
    assert violations == 0


def test_bisection_inverse_roundtrip(rng):
    for _ in range(200):
        lam = rng.uniform(-1.0, 3.0)
        x = rng.uniform(-10.0, 10.0)
        y = pp.yeo_johnson(x, lam)
        assert abs(bisect_inverse(lambda v: pp.yeo_johnson(v, lam), y) - x) < 1e-9


def test_closed_form_inverse_matches(rng):
    for lam in (-2.0, 0.0, 0.5, 1.0, 2.0, 3.5):
        x = rng.uniform(-10, 10, 100)
        np.testing.assert_allclose(pp.inverse_yeo_johnson(pp.yeo_johnson(x, lam), lam), x, atol=1e-9)


def test_overflow_guard_stays_finite():
    big = pp.yeo_johnson(np.array([1e300, -1e300]), 5.0)
    assert np.all(np.isfinite(big))
    lam = pp.fit_lambda(np.array([1e300, 1.0, 2.0, 3.0]))
    assert -5.0 <= lam <= 5.0


def test_log_likelihood_matches_scipy(rng):
    for _ in range(20):
        x = rng.normal(size=50) * 3 + rng.normal()
        lam = rng.uniform(-3, 3)
        assert pp.log_likelihood(x, lam) == pytest.approx(stats.yeojohnson_llf(lam, x), rel=1e-10)


def test_fit_lambda_matches_scipy_oracle(rng):
    for _ in range(20):
        x = np.exp(rng.normal(size=200)) * rng.choice([-1, 1]) + rng.normal()
        ref = stats.yeojohnson_normmax(x)
        if not -4.9 < ref < 4.9:
            continue
        assert pp.fit_lambda(x) == pytest.approx(ref, abs=1e-5)


def test_standard_normal_lambda_near_one():
    x = np.random.default_rng(7).normal(size=1000)
    assert 0.7 <= pp.fit_lambda(x) <= 1.3


def test_constant_column_lambda_one():
    assert pp.fit_lambda([5.0, 5.0, 5.0, 5.0]) == 1.0


def test_right_skewed_lambda_below_half():
    x = np.exp(np.random.default_rng(8).normal(size=1000)) + 1.0
    lam = pp.fit_lambda(x)
    assert lam < 0.5
    assert pp.log_likelihood(x, lam) >= pp.log_likelihood(x, 1.0)


def test_fit_two_identical_rows():
    params = pp.fit(np.ones((2, 26)) * 3.0)
    assert np.all(params.stds == 0.0)
    assert np.all(params.lambdas == 1.0)
    assert np.all(pp.transform(np.random.default_rng(0).normal(size=(4, 26)), params) == 0.0)


def test_fit_lambdas_bounded(rng):
    X = np.column_stack([rng.exponential(size=300) ** k for k in (0.5, 1, 2, 3, 5)])
    params = pp.fit(X)
    assert np.all(np.isfinite(params.lambdas))
    assert np.all((params.lambdas >= -5) & (params.lambdas <= 5))


def test_standard_normal_matrix_post_transform():
    X = np.random.default_rng(9).normal(size=(2000, 6))
    params = pp.fit(X)
    assert np.all(np.abs(params.means) < 0.1)
    assert np.all(np.abs(params.stds - 1.0) < 0.1)


def test_transform_standardizes_training_data(rng):
    X = np.column_stack([rng.lognormal(size=400), rng.normal(size=400) * 5 - 3, rng.gamma(2.0, size=400)])
    Z = pp.transform(X, pp.fit(X))
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-10)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, rtol=1e-10)


def test_degenerate_feature_becomes_zero_column(rng):
    X = np.column_stack([rng.normal(size=50), np.full(50, 2.5)])
    Z = pp.transform(X, pp.fit(X))
    assert np.all(Z[:, 1] == 0.0)
    assert Z[:, 0].std() > 0.5


def test_row_at_training_mean_maps_to_zero(rng):
    X = rng.lognormal(size=(100, 2))
    params = pp.fit(X)
    # invert the transformed-space mean back to the raw scale
    row = np.array([[pp.inverse_yeo_johnson(params.means[j], params.lambdas[j]) for j in range(2)]])
    np.testing.assert_allclose(pp.transform(row, params), 0.0, atol=1e-9)


def test_transform_does_not_change_params(rng):
    X = rng.normal(size=(60, 3))
    params = pp.fit(X)
    before = (params.lambdas.copy(), params.means.copy(), params.stds.copy())
    pp.transform(rng.normal(size=(10, 3)) * 1e6, params)
    for a, b in zip(before, (params.lambdas, params.means, params.stds)):
        assert a.tobytes() == b.tobytes()


def test_columns_fit_independently(rng):
    X = rng.lognormal(size=(80, 4))
    full = pp.fit(X)
    part = pp.fit(X[:, [1, 3]])
    for attr in ("lambdas", "means", "stds"):
        assert getattr(full.subset([1, 3]), attr).tobytes() == getattr(part, attr).tobytes()


def test_params_text_roundtrip(rng):
    params = pp.fit(rng.lognormal(size=(40, 3)))
    names, back = pp.TransformParams.from_text(params.to_text(["a", "b", "c"]))
    assert names == ["a", "b", "c"]
    for attr in ("lambdas", "means", "stds"):
        assert getattr(back, attr).tobytes() == getattr(params, attr).tobytes()


def test_backends_agree_on_transform(rng):
    ks = list(available_backends().values())
    x = rng.normal(size=300) * 10
    for lam in (-4.0, -0.3, 0.0, 0.7, 2.0, 4.5):
        ref = ks[0].yj_transform(x, lam)
        for k in ks[1:]:
            np.testing.assert_allclose(k.yj_transform(x, lam), ref, rtol=1e-13, atol=1e-15)
            assert k.yj_loglik(x, lam) == pytest.approx(ks[0].yj_loglik(x, lam), rel=1e-12)
