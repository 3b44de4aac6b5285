import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convexnn import (Dataset, SignedMeasureModel, Unit, augment, caratheodory_reduce, predict,
                      predict_many, variation_norm)
from convexnn.errors import InvalidArgument
from convexnn.model import concatenate

from conftest import ball_points


def test_augment_appends_radius():
    assert augment([0, 0], 1).tolist() == [0, 0, 1]
    assert augment([1], 2).tolist() == [1, 2]
    z = augment([3, 4], 5)
    assert z.tolist() == [3, 4, 5]
    assert np.linalg.norm(z) <= math.sqrt(2) * 5 + 1e-12


def test_augment_rejects_bad_radius():
    with pytest.raises(InvalidArgument):
        augment([1.0], 0.0)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=5), st.floats(0.1, 10))
def test_lifted_norm_is_at_most_sqrt2_R(x, R):
    x = np.array(x)
    x = R * x / max(1.0, np.linalg.norm(x))
    assert np.linalg.norm(augment(x, R)) <= math.sqrt(2) * R * (1 + 1e-12)


def test_dataset_rejects_points_outside_ball():
    with pytest.raises(InvalidArgument):
        Dataset([[2.0, 0.0]], [1.0], R=1.0)
    with pytest.raises(InvalidArgument):
        Dataset([[0.1]], [1.0, 2.0])
    with pytest.raises(InvalidArgument):
        Dataset([[np.nan]], [1.0])


def test_empty_model_predicts_zero():
    m = SignedMeasureModel(1, 2.0, 1.0)
    assert predict(m, [0.3]) == 0.0
    assert variation_norm(m) == 0.0


def test_rectifier_prediction():
    m = SignedMeasureModel(1, 2.0, 1.0, [2.0], [[1.0, 0.0]])
    assert predict(m, [3.0]) == 6.0
    assert predict(m, [-1.0]) == 0.0


def test_step_unit_on_constant_coordinate_fires_everywhere():
    m = SignedMeasureModel(0, 2.0, 1.0, [1.0], [[0.0, 1.0]])
    assert predict_many(m, np.array([[-5.0], [0.0], [7.0]])).tolist() == [1.0, 1.0, 1.0]


def test_step_is_strict_at_zero():
    m = SignedMeasureModel(0, 2.0, 1.0, [1.0], [[1.0, 0.0]])
    assert predict(m, [0.0]) == 0.0


def test_variation_norm_is_l1():
    V = [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]]
    m = SignedMeasureModel(1, 2.0, 1.0, [1, -2, 0.5], V)
    assert variation_norm(m) == 3.5


@given(st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_variation_norm_homogeneous(c, seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((4, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    m = SignedMeasureModel(1, 2.0, 1.0, rng.standard_normal(4), V)
    assert math.isclose(variation_norm(m.scaled(c)), abs(c) * variation_norm(m),
                        rel_tol=1e-12, abs_tol=1e-12)


def test_non_finite_direction_rejected():
    with pytest.raises(InvalidArgument):
        SignedMeasureModel(1, 2.0, 1.0, [1.0], [[np.nan, 1.0]])


def test_unit_norm_is_enforced():
    with pytest.raises(InvalidArgument):
        Unit([1.0, 1.0])
    u = Unit.from_direction([3.0, -4.0], p=1.0)
    assert math.isclose(np.abs(u.v).sum(), 1.0)


def test_concatenate_is_convex_combination():
    rng = np.random.default_rng(0)
    f = SignedMeasureModel(1, 2.0, 1.0, [1.0], [[0.6, 0.8]])
    g = SignedMeasureModel(1, 2.0, 1.0, [-2.0], [[0.0, 1.0]])
    h = concatenate(f, g, 0.25)
    X = rng.uniform(-1, 1, (10, 1))
    assert np.allclose(predict_many(h, X), 0.75 * predict_many(f, X) + 0.25 * predict_many(g, X))


def test_caratheodory_merges_collinear_units():
    m = SignedMeasureModel(1, 2.0, 1.0, [1.0, 2.0], [[0.6, 0.8], [0.6, 0.8]])
    x = np.array([[0.5]])
    r = caratheodory_reduce(m, x)
    assert r.k <= 2
    assert math.isclose(predict(r, [0.5]), predict(m, [0.5]), abs_tol=1e-12)


def test_caratheodory_small_model_unchanged():
    m = SignedMeasureModel(1, 2.0, 1.0, [1.0, -1.0], [[0.6, 0.8], [1.0, 0.0]])
    r = caratheodory_reduce(m, np.array([[0.1], [0.2]]))
    assert np.array_equal(r.etas, m.etas) and np.array_equal(r.V, m.V)


@given(st.integers(0, 2**32 - 1))
def test_caratheodory_keeps_predictions_and_norm(seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((20, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    m = SignedMeasureModel(1, 2.0, 1.0, rng.standard_normal(20), V)
    X = ball_points(rng, 6, 2)
    r = caratheodory_reduce(m, X)
    assert r.k <= 7
    assert np.max(np.abs(predict_many(r, X) - predict_many(m, X))) <= 1e-8
    assert variation_norm(r) <= variation_norm(m) * (1 + 1e-12)
