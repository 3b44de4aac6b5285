import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convexnn.errors import InvalidArgument, UnsupportedAlpha
from convexnn.kernels import (KernelSpec, f2_kernel_ridge, f2_random_features, featurize, gram,
                              kernel, kernel_mc, probe_grid, random_features, rf_sup_error,
                              uniform_ball)

from conftest import ball_points


def test_step_kernel_spot_values():
    for d in (1, 2, 4):
        spec = KernelSpec(0, d)
        x = np.full(d, 0.3)
        assert math.isclose(kernel(spec, x, x), 0.5)
    x = np.array([0.6, 0.8])
    assert math.isclose(kernel(KernelSpec(0, 2), x, -x), 0.25)


def test_rectifier_kernel_at_origin():
    for d in (1, 2, 3, 7):
        assert math.isclose(kernel(KernelSpec(1, d), np.zeros(d), np.zeros(d)), 1 / (2 * (d + 1)))


def test_square_kernel_on_sphere():
    for d in (1, 2, 3):
        x = np.zeros(d)
        x[0] = 1.0
        assert math.isclose(kernel(KernelSpec(2, d), x, x), 6 / ((d + 1) * (d + 3)))


def test_unsupported_alpha():
    with pytest.raises(UnsupportedAlpha):
        KernelSpec(3, 2)
    with pytest.raises(InvalidArgument):
        kernel(KernelSpec(1, 2), [0.1], [0.2, 0.3])


@pytest.mark.parametrize("alpha", [0, 1, 2])
def test_monte_carlo_brackets_closed_form(alpha):
    rng = np.random.default_rng(alpha)
    spec = KernelSpec(alpha, 3)
    for _ in range(5):
        x, xp = ball_points(rng, 2, 3)
        est, se = kernel_mc(spec, x, xp, 1_000_000, seed=int(rng.integers(2**31)))
        assert abs(est - kernel(spec, x, xp)) <= 4 * se


def test_monte_carlo_single_sample_and_determinism():
    spec = KernelSpec(1, 2)
    x, xp = np.array([0.1, 0.2]), np.array([-0.3, 0.4])
    est, se = kernel_mc(spec, x, xp, 1, seed=3)
    assert math.isnan(se)
    assert kernel_mc(spec, x, xp, 5000, seed=9) == kernel_mc(spec, x, xp, 5000, seed=9)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 1, 2]))
def test_gram_is_psd_and_symmetric(seed, alpha):
    rng = np.random.default_rng(seed)
    X = ball_points(rng, 12, 2)
    K = gram(KernelSpec(alpha, 2), X)
    assert np.allclose(K, K.T, atol=1e-14)
    assert np.linalg.eigvalsh(K).min() >= -1e-10


def test_feature_map_determinism_and_psd():
    a = random_features(1, 50, seed=4, d=2)
    b = random_features(1, 50, seed=4, d=2)
    assert np.array_equal(a.V, b.V)
    F = featurize(a, ball_points(np.random.default_rng(0), 10, 2))
    assert np.linalg.eigvalsh(F @ F.T).min() >= -1e-12


def test_random_feature_error_shrinks_with_m():
    spec = KernelSpec(1, 2)
    P = probe_grid(2)
    small = np.mean([rf_sup_error(spec, random_features(spec, 100, s), P) for s in range(5)])
    large = np.mean([rf_sup_error(spec, random_features(spec, 10_000, s), P) for s in range(5)])
    assert 5 <= small / large <= 20


def test_two_point_kernel_ridge_by_hand(frozen):
    ref = frozen["kernel_ridge_2x2"]
    X = np.array(ref["x"])[:, None]
    spec = KernelSpec(1, 1)
    assert np.allclose(gram(spec, X), ref["gram"], rtol=0, atol=1e-14)
    pred = f2_kernel_ridge(X, np.array(ref["y"]), spec, ref["lam"], jitter=0.0)
    assert np.allclose(pred.coef, ref["coef"], rtol=0, atol=1e-10)
    assert abs(pred(np.array([[ref["x_query"]]]))[0] - ref["prediction"]) <= 1e-10


def test_heavy_ridge_predicts_zero():
    rng = np.random.default_rng(1)
    X = ball_points(rng, 20, 2)
    y = rng.standard_normal(20)
    Xt = ball_points(rng, 5, 2)
    k = f2_kernel_ridge(X, y, KernelSpec(1, 2), 1e8)
    r = f2_random_features(X, y, random_features(1, 30, 0, d=2), 1e8)
    assert np.max(np.abs(k(Xt))) < 1e-6
    assert np.max(np.abs(r(Xt))) < 1e-6


def test_uniform_ball_respects_radius():
    rng = np.random.default_rng(0)
    assert np.linalg.norm(uniform_ball(rng, 500, 3, 2.0), axis=1).max() <= 2.0
    assert np.abs(uniform_ball(rng, 500, 3, 2.0, q=np.inf)).max() <= 2.0
    with pytest.raises(InvalidArgument):
        uniform_ball(rng, 5, 2, q=1.5)
