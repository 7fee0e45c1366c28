import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from activemc.generators import gen_gaussian_lowrank, named_fixture
from activemc.linalg import orthonormalize, restricted_residual
from activemc.oracle import ColumnExhausted, CostModel, NoiseModel, ObservationOracle


def test_reobservation_is_free():
    o = ObservationOracle(np.arange(6.0).reshape(2, 3))
    assert o.observe(0, 0) == 0.0
    assert o.observe(0, 0) == 0.0
    assert o.stats.count == 1 and o.stats.cost == 1.0


def test_index_errors():
    o = ObservationOracle(np.zeros((2, 3)))
    with pytest.raises(IndexError):
        o.observe(2, 0)
    with pytest.raises(IndexError):
        o.observe_entries([0, 5], 1)
    with pytest.raises(IndexError):
        o.observe_row(-1)
    with pytest.raises(IndexError):
        o.observe_block([0], [3])


def test_per_entry_cost_of_two_rows_and_two_columns():
    fx = named_fixture("erhc-greedy-gap")
    o = ObservationOracle(fx.matrix, cost=CostModel.per_entry(fx.costs))
    o.observe_block([0, 1], range(4))
    o.observe_block(range(4), [0, 1])
    assert o.stats.cost == 32.0
    assert o.stats.count == 12


def test_row_and_column_share_one_entry():
    o = ObservationOracle(named_fixture("walkthrough").matrix)
    o.observe_row(3)
    o.observe_column(3)
    assert o.stats.count == 6 + 4 - 1
    st_ = o.stats
    assert st_.full_rows == 1 and st_.full_columns == 1


def test_per_column_costs():
    chi = np.array([1.0, 2.5, 0.0, 4.0])
    o = ObservationOracle(np.ones((3, 4)), cost=CostModel.per_column(chi))
    o.observe_column(1)
    assert o.stats.cost == 3 * 2.5
    o.observe_column(1)
    assert o.stats.cost == 3 * 2.5


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel.per_column([1, -1])
    with pytest.raises(ValueError):
        CostModel.per_entry([[1, 2]]).table((2, 2))
    with pytest.raises(ValueError):
        CostModel.per_column([1, 2]).table((2, 3))
    assert np.array_equal(CostModel.uniform().table((2, 2)), np.ones((2, 2)))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3)), max_size=30), st.integers(0, 1000))
def test_metering_counts_the_union_of_requests(requests, seed):
    rng = np.random.default_rng(seed)
    costs = rng.integers(0, 5, size=(5, 4)).astype(float)
    o = ObservationOracle(rng.standard_normal((5, 4)), cost=CostModel.per_entry(costs))
    seen = set()
    for i, j in requests:
        if rng.random() < 0.5:
            o.observe(i, j)
            seen.add((i, j))
        else:
            o.observe_entries([i, i, (i + 1) % 5], j)
            seen |= {(i, j), ((i + 1) % 5, j)}
    assert o.stats.count == len(seen)
    assert o.stats.cost == pytest.approx(sum(costs[i, j] for i, j in seen))
    assert sum(o.stats.phase_counts.values()) == len(seen)


def test_phase_counts():
    o = ObservationOracle(np.ones((3, 3)))
    o.set_phase("a")
    o.observe_row(0)
    o.set_phase("b")
    o.observe_column(0)
    assert o.stats.phase_counts == {"a": 3, "b": 2}


def test_draw_unobserved():
    o = ObservationOracle(np.ones((6, 2)), seed=0)
    o.observe_entries([0, 1, 2, 3, 4], 0)
    assert o.draw_unobserved_uniform(0) == 5
    o.observe_column(0)
    with pytest.raises(ColumnExhausted):
        o.draw_unobserved_uniform(0)
    # drawing does not observe
    assert o.stats.count == 6


def test_draw_is_uniform():
    o = ObservationOracle(np.ones((6, 1)), seed=1)
    draws = [o.draw_unobserved_uniform(0) for _ in range(60000)]
    freq = np.bincount(draws, minlength=6)
    assert stats.chisquare(freq).pvalue > 1e-3
    assert np.all(np.abs(freq / 60000 - 1 / 6) <= 3 * np.sqrt((1 / 6) * (5 / 6) / 60000) + 1e-3)


def test_replay_determinism():
    a = gen_gaussian_lowrank(8, 5, 2, seed=3)
    seqs = []
    for _ in range(2):
        o = ObservationOracle(a, seed=42)
        seqs.append([o.draw_unobserved_uniform(j % 5) for j in range(20)])
    assert seqs[0] == seqs[1]


def test_bounded_noise_respects_cap():
    a = gen_gaussian_lowrank(20, 30, 3, seed=0)
    o = ObservationOracle(a, noise=NoiseModel.bounded(0.1, seed=5))
    clean, view, sigma = o.harness_view()
    assert not sigma
    assert np.allclose(np.linalg.norm(clean, axis=0), 1.0)
    assert np.all(np.linalg.norm(view - clean, axis=0) <= 0.1 + 1e-12)
    assert np.allclose(o.observe_column(4), view[:, 4])


def test_sparse_noise_columns_leave_the_column_space():
    a = gen_gaussian_lowrank(20, 30, 3, seed=0)
    o = ObservationOracle(a, noise=NoiseModel.sparse_columns(4, seed=9))
    clean, view, sigma = o.harness_view()
    assert len(sigma) == 4
    basis = orthonormalize(clean)
    rows = np.arange(20)
    for j in range(30):
        res = restricted_residual(basis, rows, view[:, j])
        if j in sigma:
            assert res > 1e-3
        else:
            assert res < 1e-9 and np.array_equal(view[:, j], clean[:, j])


def test_explicit_noise_columns():
    o = ObservationOracle(np.zeros((4, 5)), noise=NoiseModel.sparse_columns(columns=(1, 3), seed=0))
    _, view, sigma = o.harness_view()
    assert sigma == frozenset({1, 3})
    assert np.all(view[:, [0, 2, 4]] == 0) and np.all(view[:, [1, 3]] != 0)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel.bounded(-0.1)
    with pytest.raises(ValueError):
        NoiseModel(kind="weird").apply(np.ones((2, 2)))
