import itertools

import numpy as np
import pytest
import sympy as sp

from activemc.generators import named_fixture
from activemc.hetcost import optimal_two_stage, plan_cost, run_erhc, run_erhc_column_costs
from activemc.linalg import Tolerance
from activemc.oracle import CostModel, ObservationOracle
from activemc.sparsity import column_space, sparsity_number

EXACT = Tolerance(exact=True)


def brute_best_plan(a, costs, psibar):
    """Cheapest two-stage plan by direct enumeration of entry sets."""
    m, n = a.shape
    r = sp.Matrix(a.astype(int).tolist()).rank()
    best = None
    for rows in itertools.combinations(range(m), psibar + 1):
        for cols in itertools.combinations(range(n), r):
            if sp.Matrix(a[:, cols].astype(int).tolist()).rank() < r:
                continue
            entries = {(i, j) for i in rows for j in range(n)} | {(i, j) for i in range(m) for j in cols}
            total = sum(costs[i, j] for i, j in entries)
            if best is None or total < best:
                best = total
    return best


def _erhc(fx, psibar=1):
    oracle = ObservationOracle(fx.matrix, cost=CostModel.per_entry(fx.costs))
    return run_erhc(oracle, psibar, tol=EXACT).evaluate(fx.matrix)


def test_greedy_gap_fixture():
    fx = named_fixture("erhc-greedy-gap")
    res = _erhc(fx)
    plan = res.details["plan"]
    assert res.success
    assert plan.rows == (0, 1) and plan.columns == (0, 1)
    assert res.stats.cost == plan.cost == 32
    best = optimal_two_stage(fx.matrix, fx.costs, 1)
    assert best.cost == 31 == brute_best_plan(fx.matrix, fx.costs, 1)
    assert plan_cost(fx.costs, best.rows, best.columns) == 31


def test_greedy_optimal_fixture():
    fx = named_fixture("erhc-greedy-optimal")
    res = _erhc(fx)
    assert res.success and res.stats.cost == 32
    assert optimal_two_stage(fx.matrix, fx.costs, 1).cost == 32 == brute_best_plan(fx.matrix, fx.costs, 1)


def test_tightness_family_approaches_two():
    fx = named_fixture("erhc-tightness", eps=0.25)
    res = _erhc(fx)
    assert res.success
    assert res.stats.cost == pytest.approx(80 - 8 * 0.25 + 12 * 0.0025)
    best = optimal_two_stage(fx.matrix, fx.costs, 1)
    assert best.cost == pytest.approx(40 + 16 * 0.0025)
    assert res.stats.cost / best.cost >= 1.9


def test_tightness_ratio_grows_as_eps_shrinks():
    ratios = []
    for eps in (1.0, 0.5, 0.25, 0.1):
        fx = named_fixture("erhc-tightness", eps=eps)
        ratios.append(_erhc(fx).stats.cost / optimal_two_stage(fx.matrix, fx.costs, 1).cost)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert max(ratios) < 2


def _random_instance(rng):
    m, n = int(rng.integers(3, 6)), int(rng.integers(3, 7))
    r = int(rng.integers(1, min(m, n)))
    while True:
        a = (rng.integers(-2, 3, size=(m, r)) @ rng.integers(-2, 3, size=(r, n))).astype(float)
        if np.linalg.matrix_rank(a) == r:
            break
    costs = rng.integers(0, 6, size=(m, n)).astype(float)
    return a, costs, sparsity_number(column_space(a, EXACT), tol=EXACT)


@pytest.mark.parametrize("seed", range(40))
def test_greedy_within_factor_two_of_the_best_plan(seed):
    rng = np.random.default_rng(seed)
    a, costs, psibar = _random_instance(rng)
    res = run_erhc(ObservationOracle(a, cost=CostModel.per_entry(costs)), psibar, tol=EXACT).evaluate(a)
    assert res.success
    best = brute_best_plan(a, costs, psibar)
    assert optimal_two_stage(a, costs, psibar, tol=EXACT).cost == pytest.approx(best)
    assert best <= res.stats.cost <= 2 * best + 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_column_costs_give_the_optimum(seed):
    rng = np.random.default_rng(100 + seed)
    a, _, psibar = _random_instance(rng)
    chi = rng.integers(0, 9, size=a.shape[1]).astype(float)
    table = np.tile(chi, (a.shape[0], 1))
    res = run_erhc_column_costs(ObservationOracle(a, cost=CostModel.per_column(chi)), psibar, tol=EXACT)
    assert res.evaluate(a).success
    assert res.stats.cost == pytest.approx(brute_best_plan(a, table, psibar))


def test_column_costs_need_a_source():
    with pytest.raises(ValueError):
        run_erhc_column_costs(ObservationOracle(np.ones((3, 3))), 0)


def test_plan_cost_counts_the_overlap_once():
    c = np.arange(12.0).reshape(3, 4)
    expect = sum(c[i, j] for i in range(3) for j in range(4) if i == 1 or j in (0, 2))
    assert plan_cost(c, [1], [0, 2]) == expect


def test_exhaustive_search_limits():
    with pytest.raises(ValueError):
        optimal_two_stage(np.ones((13, 2)), np.ones((13, 2)), 0)
    with pytest.raises(ValueError):
        optimal_two_stage(np.ones((3, 3)), np.ones((3, 3)), 3)
    with pytest.raises(ValueError):
        run_erhc(ObservationOracle(np.ones((3, 3))), 3)
