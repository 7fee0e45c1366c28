import numpy as np
import pytest

from activemc.generators import (FIXTURE_NAMES, erhc_tightness_costs, gen_coherent_lowrank, gen_gaussian_lowrank,
                                 generic_profiles, inject_bounded_noise, inject_sparse_noise_columns,
                                 make_column_space_coherent, make_row_space_coherent, normalize_columns,
                                 named_fixture)
from activemc.linalg import Tolerance, numeric_rank, orthonormalize, restricted_residual
from activemc.sparsity import (coherence, column_space, nonsparsity_number_exact, row_space, sparsity_number,
                               validate_profile)


@pytest.mark.parametrize("seed", range(100))
def test_gaussian_rank_and_sparsity_number(seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, 6))
    a = gen_gaussian_lowrank(12, 15, r, seed)
    assert numeric_rank(a) == r
    assert sparsity_number(column_space(a)) == r - 1


def test_gaussian_edge_cases():
    assert numeric_rank(gen_gaussian_lowrank(5, 7, 5, 0)) == 5
    assert np.all(gen_gaussian_lowrank(3, 4, 0, 0) == 0)
    with pytest.raises(ValueError):
        gen_gaussian_lowrank(3, 4, 4)
    assert np.array_equal(gen_gaussian_lowrank(4, 4, 2, 7), gen_gaussian_lowrank(4, 4, 2, 7))


@pytest.mark.parametrize("seed", range(10))
def test_column_coherent_generator(seed):
    m, n, r = 20, 25, 4
    a = make_column_space_coherent(gen_gaussian_lowrank(m, n, r - 1, seed), 1, seed + 100)
    assert numeric_rank(a) == r
    assert coherence(column_space(a)) == pytest.approx(m / r, rel=1e-12)
    assert nonsparsity_number_exact(column_space(a)) == 1


def test_row_coherent_generator():
    m, n, r = 15, 20, 3
    a = make_row_space_coherent(gen_gaussian_lowrank(m, n, r - 1, 1), 1, 2)
    assert coherence(row_space(a)) == pytest.approx(n / r, rel=1e-12)
    assert nonsparsity_number_exact(row_space(a)) == 1


def test_coherent_generator_identity_and_errors():
    a = gen_gaussian_lowrank(5, 6, 2, 0)
    assert np.array_equal(make_column_space_coherent(a, 0, 1), a)
    with pytest.raises(ValueError):
        make_column_space_coherent(a, 5)
    with pytest.raises(ValueError):
        make_row_space_coherent(a, 6)
    with pytest.raises(ValueError):
        gen_coherent_lowrank(10, 10, 1, 1, 1)


@pytest.mark.parametrize("cc,cr", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_generic_profiles_match_measurement(cc, cr):
    m, n, r = 9, 10, 3
    a = gen_coherent_lowrank(m, n, r, cc, cr, seed=5)
    pu, pv = generic_profiles(m, n, r, cc, cr)
    assert numeric_rank(a) == r
    assert sparsity_number(column_space(a)) == pu.psibar
    assert sparsity_number(row_space(a)) == pv.psibar
    if cc:
        assert coherence(column_space(a)) == pytest.approx(pu.mu)


def test_sparse_noise_columns():
    a = gen_gaussian_lowrank(10, 12, 2, 0)
    same, sigma = inject_sparse_noise_columns(a, 0, 1)
    assert np.array_equal(same, a) and sigma == frozenset()
    noisy, sigma = inject_sparse_noise_columns(a, 3, 1)
    assert len(sigma) == 3
    basis = orthonormalize(a)
    for j in sigma:
        assert restricted_residual(basis, np.arange(10), noisy[:, j]) > 1e-3
    with pytest.raises(ValueError):
        inject_sparse_noise_columns(a, 13)


@pytest.mark.parametrize("seed", range(5))
def test_deleting_columns_lowers_row_nonsparsity_by_at_most_a(seed):
    rng = np.random.default_rng(seed)
    # sparse integer factors give row spaces with psi well below the generic n - r + 1
    a = (rng.integers(-2, 3, size=(8, 3)) @ (rng.integers(-2, 3, size=(3, 10)) * (rng.random((3, 10)) < 0.6)))
    a = a.astype(float)
    before = nonsparsity_number_exact(row_space(a))
    for k in range(1, 4):
        keep = np.sort(rng.choice(10, size=10 - k, replace=False))
        sub = a[:, keep]
        if before > k:
            assert numeric_rank(sub) == numeric_rank(a)
            assert nonsparsity_number_exact(row_space(sub)) >= before - k


def test_injected_noise_column_enters_the_row_space():
    a = gen_gaussian_lowrank(10, 10, 2, 0)
    noisy, sigma = inject_sparse_noise_columns(a, 2, 1)
    # each noise column adds its standard vector to the row space
    assert nonsparsity_number_exact(row_space(noisy)) == 1
    assert numeric_rank(noisy) == 4


def test_bounded_noise():
    a = gen_gaussian_lowrank(30, 40, 3, 0)
    assert np.allclose(inject_bounded_noise(a, 0.0, 1), normalize_columns(a))
    worst = 0.0
    for seed in range(100):
        worst = max(worst, np.linalg.norm(inject_bounded_noise(a, 0.05, seed) - normalize_columns(a), axis=0).max())
    assert worst <= 0.05 + 1e-12
    assert numeric_rank(inject_bounded_noise(a, 0.05, 3)) == 30
    with pytest.raises(ValueError):
        normalize_columns(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        inject_bounded_noise(a, -1.0)


def test_fixtures_are_as_printed():
    assert named_fixture("A").matrix.tolist() == [[1, 2, 2, 2, 2, 2], [0, 2, 2, 2, 2, 2], [0, 2, 2, 2, 2, 2],
                                                  [0, 2, 2, 2, 2, 2]]
    assert named_fixture("walkthrough").matrix.shape == (6, 4)
    assert numeric_rank(named_fixture("walkthrough").matrix) == 1
    gap = named_fixture("erhc-greedy-gap")
    assert gap.costs.tolist() == [[1, 1, 4, 1], [1, 5, 3, 4], [4, 3, 4, 4], [1, 4, 4, 8]]
    with pytest.raises(KeyError):
        named_fixture("nope")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_profiles_are_consistent(name):
    fx = named_fixture(name)
    for prof in fx.profiles():
        assert prof.exact
        assert validate_profile(prof) == []


def test_erhc_tightness_fixture():
    fx = named_fixture("erhc-tightness", eps=0.25)
    tol = Tolerance(exact=True)
    assert numeric_rank(fx.matrix, tol) == 2
    assert sparsity_number(column_space(fx.matrix, tol), tol=tol) == 1
    assert np.array_equal(fx.costs, erhc_tightness_costs(0.25))
    assert np.all(fx.costs >= 0)
