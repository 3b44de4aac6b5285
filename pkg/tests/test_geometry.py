import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull

from convexnn.errors import BudgetExceeded, InvalidArgument, RankDeficient
from convexnn.geometry import (Ellipsoid, Zonotope, alpha2_saddle, ellipsoid_hausdorff,
                               ellipsoid_hausdorff_sampled, fw_step_as_hausdorff, mvee, support,
                               support_gap_sampled,
                               zonotope_hausdorff, zonotope_vertices)
from convexnn.oracles import oracle_exact, oracle_restarts

from conftest import ball_points, lift


def test_segment_support():
    Z = Zonotope([[1.0, 0.0]])
    assert support(Z, [1.0, 0.0]) == 1.0
    assert support(Z, [-1.0, 0.0]) == 0.0


def test_support_adds_over_generators():
    assert support(Zonotope([[1.0, 0.0], [0.0, 1.0]]), [1.0, 1.0]) == 2.0


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_support_positively_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    Z = Zonotope(rng.standard_normal((4, 3)))
    w = rng.standard_normal(3)
    assert math.isclose(support(Z, c * w), c * support(Z, w), rel_tol=1e-12, abs_tol=1e-12)


def test_identical_bodies_have_distance_zero():
    Z = Zonotope(np.random.default_rng(0).standard_normal((4, 2)))
    assert zonotope_hausdorff(Z, Z) == 0.0


def test_segment_against_origin():
    assert math.isclose(zonotope_hausdorff(Zonotope([[1.0, 0.0]]), Zonotope([], dim=2)), 1.0)


def test_vertices_of_square():
    V = zonotope_vertices(Zonotope([[1.0, 0.0], [0.0, 1.0]]))
    assert sorted(map(tuple, np.round(V, 12))) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def _grid_gap(Tp, Tm, count=100_000):
    th = np.linspace(0, 2 * np.pi, count, endpoint=False)
    W = np.stack([np.cos(th), np.sin(th)], axis=1)
    hp = np.maximum(W @ Tp.T, 0).sum(axis=1)
    hm = np.maximum(W @ Tm.T, 0).sum(axis=1)
    return float(np.max(np.abs(hp - hm)))


def test_planar_hausdorff_matches_direction_grid():
    rng = np.random.default_rng(11)
    for _ in range(5):
        Tp, Tm = rng.standard_normal((5, 2)), rng.standard_normal((5, 2))
        got = zonotope_hausdorff(Zonotope(Tp), Zonotope(Tm))
        # a plain grid undershoots at kinks of the support gap, linearly in the spacing
        grid = _grid_gap(Tp, Tm)
        assert grid - 1e-12 <= got <= grid + 1e-4
        refined = support_gap_sampled(lambda W: np.maximum(W @ Tp.T, 0).sum(axis=1),
                                      lambda W: np.maximum(W @ Tm.T, 0).sum(axis=1), 2)
        assert abs(got - refined) <= 1e-6


def test_fw_step_zero_targets():
    Z = lift(ball_points(np.random.default_rng(0), 4, 2))
    assert fw_step_as_hausdorff(Z, np.zeros(4)) == 0.0


def test_fw_step_nonnegative_targets():
    rng = np.random.default_rng(3)
    Z = lift(ball_points(rng, 5, 2))
    y = rng.uniform(0, 1, 5)
    assert math.isclose(fw_step_as_hausdorff(Z, y), 5 * oracle_exact(Z, y, 1).value, rel_tol=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_fw_step_is_n_times_oracle(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 7)), int(rng.integers(1, 3))
    Z = lift(ball_points(rng, n, d))
    y = rng.standard_normal(n)
    assert abs(fw_step_as_hausdorff(Z, y) - n * oracle_exact(Z, y, 1).value) <= 1e-8


def test_saddle_trivial_cases():
    assert alpha2_saddle([[1.0, 0.0]], [0.0]) == 0.0
    assert math.isclose(alpha2_saddle([[1.0, 0.0]], [1.0]), 0.5, rel_tol=1e-9)


def test_saddle_matches_restarts_oracle():
    rng = np.random.default_rng(8)
    Z = lift(ball_points(rng, 6, 2))
    y = rng.standard_normal(6)
    sad = max(alpha2_saddle(Z, y), alpha2_saddle(Z, -y))
    step = oracle_restarts(Z, y, 2, restarts=200).value
    assert abs(sad - 6 / 2 * step) <= 1e-4


def test_saddle_budget_and_arguments():
    rng = np.random.default_rng(0)
    Z = lift(ball_points(rng, 13, 1))
    with pytest.raises(BudgetExceeded):
        alpha2_saddle(Z, np.ones(13))
    with pytest.raises(InvalidArgument):
        alpha2_saddle(Z[:2], [1.0, 1.0], beta=3.0)
    with pytest.raises(InvalidArgument):
        alpha2_saddle(Z[:2], [1.0, 1.0], alpha=1)


def test_mvee_of_cross_polytope_is_unit_ball():
    for d in (2, 3):
        P = np.vstack([np.eye(d), -np.eye(d)])
        E = mvee(P, tol=1e-9)
        assert np.allclose(E.shape, np.eye(d), atol=1e-6)
        assert np.allclose(E.center, 0, atol=1e-8)


def test_mvee_rejects_flat_sets():
    with pytest.raises(RankDeficient):
        mvee(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))


def test_mvee_sandwiches_zonotope():
    rng = np.random.default_rng(4)
    for _ in range(5):
        P = zonotope_vertices(Zonotope(rng.standard_normal((5, 2))))
        E = mvee(P, tol=1e-9)
        assert np.all(E.contains(P, tol=1e-6))
        hull = ConvexHull(P)
        th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
        inner = E.center + (U @ E.sqrt_shape().T) / math.sqrt(2)
        slack = inner @ hull.equations[:, :-1].T + hull.equations[:, -1]
        assert np.all(slack <= 1e-7)


def test_ellipsoid_analytic_distances():
    I2 = np.eye(2)
    E = Ellipsoid([0.0, 0.0], np.diag([1.0, 4.0]))
    assert ellipsoid_hausdorff(E, E) == 0.0
    assert math.isclose(ellipsoid_hausdorff(Ellipsoid([0, 0], I2), Ellipsoid([0, 0], 9 * I2)), 2.0,
                        rel_tol=1e-9)
    assert math.isclose(ellipsoid_hausdorff(Ellipsoid([0, 0], I2), Ellipsoid([3, 4], I2)), 5.0,
                        rel_tol=1e-9)


def _random_spd(rng, d):
    A = rng.standard_normal((d, d))
    return A @ A.T + 0.1 * np.eye(d)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_ellipsoid_distance_symmetric_and_matches_sampling(seed, d):
    rng = np.random.default_rng(seed)
    E1 = Ellipsoid(rng.standard_normal(d), _random_spd(rng, d))
    E2 = Ellipsoid(rng.standard_normal(d), _random_spd(rng, d))
    a, b = ellipsoid_hausdorff(E1, E2), ellipsoid_hausdorff(E2, E1)
    assert math.isclose(a, b, rel_tol=1e-12)
    # sampling only sees directions, so it can never exceed the exact value by much
    assert ellipsoid_hausdorff_sampled(E1, E2, count=20_000) <= a * (1 + 1e-9) + 1e-9


def test_ellipsoid_validation():
    with pytest.raises(InvalidArgument):
        Ellipsoid([0.0, 0.0], [[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(InvalidArgument):
        Ellipsoid([0.0], np.eye(2))
