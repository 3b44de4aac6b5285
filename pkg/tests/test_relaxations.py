import numpy as np
import pytest

from convexnn.errors import BudgetExceeded, InvalidArgument, NonConverged
from convexnn.oracles import oracle_exact
from convexnn.relaxations import (
    KINDS,
    RelaxationProblem,
    random_direction_scaling,
    relaxation_bound,
    residuals,
    solve_relaxation,
)

from conftest import ball_points, lift


def _instance(seed, n=None, d=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 9))
    d = d or int(rng.integers(1, 3))
    return lift(ball_points(rng, n, d, 1.0), 1.0), rng.standard_normal(n)


@pytest.mark.parametrize("kind", KINDS)
def test_single_point(kind):
    Z = np.array([[1.0, 0.0]])
    res = solve_relaxation(RelaxationProblem(Z, [1.0], kind))
    assert res.value >= 1.0 - 1e-6
    assert oracle_exact(Z, np.array([1.0]), 1).value == pytest.approx(1.0)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_targets_give_zero(kind):
    Z, _ = _instance(0, n=4, d=2)
    assert abs(solve_relaxation(RelaxationProblem(Z, np.zeros(4), kind)).value) <= 1e-7


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(6))
def test_upper_bounds_exact_step(kind, seed):
    Z, g = _instance(seed)
    exact = oracle_exact(Z, g, 1).value
    assert relaxation_bound(Z, g, kind) >= exact - 1e-6


@pytest.mark.parametrize("seed", range(6))
def test_lifted_variant_is_tighter(seed):
    Z, g = _instance(100 + seed)
    assert relaxation_bound(Z, g, "dim-nd") <= relaxation_bound(Z, g, "dim-d") + 1e-6


@pytest.mark.parametrize("kind", KINDS)
def test_returned_variables_feasible(kind):
    Z, g = _instance(7, n=5, d=2)
    prob = RelaxationProblem(Z, g, kind)
    res = solve_relaxation(prob)
    r = residuals(prob, res.variables)
    assert r["max"] <= 1e-6
    assert np.trace(res.variables["V"]) == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(res.variables["M"])[0] >= -1e-8


def test_size_budget_and_bad_input():
    rng = np.random.default_rng(0)
    Z = lift(ball_points(rng, 40, 2, 1.0), 1.0)
    with pytest.raises(BudgetExceeded):
        solve_relaxation(RelaxationProblem(Z, rng.standard_normal(40)))
    with pytest.raises(InvalidArgument):
        RelaxationProblem(Z, np.zeros(3))
    with pytest.raises(InvalidArgument):
        RelaxationProblem(Z, np.zeros(40), kind="rank-one")


def test_nonconverged_carries_result():
    Z, g = _instance(3, n=6, d=2)
    with pytest.raises(NonConverged) as info:
        solve_relaxation(RelaxationProblem(Z, g, "dim-nd"), max_iter=2)
    res = info.value.result
    assert res is not None and not res.converged
    assert np.isfinite(res.value)
    assert res.diagnostics["residuals"]["max"] > 1e-6


def test_exact_scaling_slope():
    tab = random_direction_scaling("exact", [8, 16, 32, 64], d=2, trials=60, seed=1)
    assert all(m > 0 for _, m, _ in tab.rows)
    assert tab.slope == pytest.approx(-0.5, abs=0.1)
    assert tab.to_csv().startswith("n,mean,se\n8,")


def test_relaxation_scaling_table_is_reported():
    tab = random_direction_scaling("dim-d", [4, 8], d=1, trials=3, seed=0)
    assert len(tab.rows) == 2 and np.isfinite(tab.slope)
