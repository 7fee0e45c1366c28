import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activemc.generators import named_fixture
from activemc.linalg import Tolerance, orthonormalize
from activemc.sparsity import (EstimateOnlyError, SubspaceProfile, coherence, column_space, matrix_profiles,
                               nonsparsity_lower_bound, nonsparsity_number_exact, restricted_dependence,
                               row_space, sparsity_number, subspace_profile, validate_profile)

EXACT = Tolerance(exact=True)


def brute_psibar_rank2(b):
    """Independent oracle for two-dimensional spaces.

    ``x = a b1 + c b2`` vanishes at row ``i`` iff ``(a, c)`` is orthogonal to
    ``(b1_i, b2_i)``. Zero rows vanish for every ``(a, c)``; otherwise the
    most zeros come from the largest class of mutually proportional rows.
    """
    rows = [tuple(int(v) for v in row) for row in b]
    zero = sum(1 for row in rows if row == (0, 0))
    nz = [row for row in rows if row != (0, 0)]
    best = 0
    for p in nz:
        best = max(best, sum(1 for q in nz if p[0] * q[1] - p[1] * q[0] == 0))
    return zero + best


def brute_psibar_grid(b, span=3):
    """Lower bound on the sparsity number: most zeros over integer coefficient vectors in a box."""
    r = b.shape[1]
    best = -1
    for c in itertools.product(range(-span, span + 1), repeat=r):
        if not any(c):
            continue
        x = b @ np.array(c, dtype=float)
        if np.any(x != 0):
            best = max(best, int(np.sum(x == 0)))
    return best


int_rank2 = st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=2, max_size=7).map(
    lambda rows: np.array(rows, dtype=float))


@settings(max_examples=80, deadline=None)
@given(int_rank2)
def test_rank2_sparsity_number_matches_proportional_rows_oracle(b):
    if np.linalg.matrix_rank(b) < 2:
        return
    expect = brute_psibar_rank2(b)
    assert sparsity_number(b, method="kernel", tol=EXACT) == expect
    assert sparsity_number(b, method="zero-set", tol=EXACT) == expect
    assert sparsity_number(b, method="kernel") == expect


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_kernel_and_zero_set_methods_agree(m, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, m)
    b = rng.integers(-1, 2, size=(m, r)) * (rng.random((m, r)) < 0.6)
    if np.linalg.matrix_rank(b) < r:
        return
    k = sparsity_number(b, method="kernel", tol=EXACT)
    z = sparsity_number(b, method="zero-set", tol=EXACT)
    assert k == z
    assert brute_psibar_grid(b.astype(float), span=2) <= k


def test_tightness_fixture():
    a = named_fixture("tightness").matrix
    assert sparsity_number(column_space(a, EXACT), tol=EXACT) == 3
    assert nonsparsity_number_exact(a, tol=EXACT) == 1
    assert validate_profile(subspace_profile(a, EXACT)) == []


def test_all_ones_and_full_space():
    m = 6
    assert nonsparsity_number_exact(np.ones((m, 1))) == m
    assert sparsity_number(np.eye(m)) == m - 1


@pytest.mark.parametrize("seed", range(5))
def test_generic_gaussian_space_has_minimal_sparsity_number(seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, 5))
    b = rng.standard_normal((9, r))
    assert sparsity_number(b) == r - 1
    assert sparsity_number(b, method="zero-set") == r - 1


def test_matrices_A_and_B():
    pa_col, pa_row = matrix_profiles(named_fixture("A").matrix, EXACT)
    pb_col, pb_row = matrix_profiles(named_fixture("B").matrix, EXACT)
    assert pa_col.mu == pytest.approx(2.0) and pb_col.mu == pytest.approx(2.0)
    assert pa_col.psi == pb_col.psi == 1
    assert pa_row.psi == 1
    # general row of B's row space is (a, b, a+2b, 2a+3b, 3a+4b, 4a+5b): at most one zero
    assert pb_row.psi == 5
    assert brute_psibar_rank2(named_fixture("B").matrix[:2].T) == 1


def test_coherence_values():
    assert coherence(np.eye(7)[:, :1]) == pytest.approx(7.0)
    # orthonormal rows of the real DFT frame: all leverage scores equal
    m = 8
    t = np.arange(m)
    frame = np.column_stack([np.ones(m), np.cos(2 * np.pi * t / m), np.sin(2 * np.pi * t / m)])
    assert coherence(frame) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        coherence(np.zeros((4, 0)))


def test_validate_profile_flags_violations():
    assert "ψ̄ < r−1" in validate_profile(SubspaceProfile(m=4, r=3, psi=3, psibar=1, mu=1.5, exact=True))
    assert "ψ̄ ≠ m−ψ" in validate_profile(SubspaceProfile(m=4, r=1, psi=2, psibar=1, mu=2.0, exact=True))
    assert "μ > m/r" in validate_profile(SubspaceProfile(m=4, r=2, psi=1, psibar=3, mu=2.5, exact=True))
    assert "μ < (m/r)/ψ" in validate_profile(SubspaceProfile(m=8, r=1, psi=2, psibar=6, mu=3.0, exact=True))
    assert "μ < 1" in validate_profile(SubspaceProfile(m=4, r=4, psi=1, psibar=3, mu=0.5, exact=True))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_profile_inequalities_on_random_subspaces(m, r, seed):
    r = min(r, m)
    rng = np.random.default_rng(seed)
    b = rng.integers(-2, 3, size=(m, r)) * (rng.random((m, r)) < 0.5)
    if np.linalg.matrix_rank(b) < r:
        return
    assert validate_profile(subspace_profile(b, EXACT)) == []
    assert validate_profile(subspace_profile(b + 0.0)) == []


def test_estimate_only_fallback():
    b = orthonormalize(np.random.default_rng(0).standard_normal((30, 12)))
    with pytest.raises(EstimateOnlyError):
        sparsity_number(b, max_rows=22, max_subsets=10)
    prof = subspace_profile(b, max_rows=22, max_subsets=10)
    assert not prof.exact
    assert prof.psi == nonsparsity_lower_bound(b) >= 1
    assert prof.psi == max(1, math.ceil(30 / 12 / prof.mu - 1e-9))


def test_zero_subspace_rejected():
    with pytest.raises(ValueError):
        sparsity_number(np.zeros((3, 0)))


def test_tightness_witness():
    a = named_fixture("tightness").matrix
    pair = a[:, [0, 2]]
    assert restricted_dependence(pair, [1, 2, 3], EXACT)
    assert not restricted_dependence(pair, [0, 1, 2, 3], EXACT)
    # one more row than the sparsity number always suffices
    for omega in itertools.combinations(range(4), 4):
        assert not restricted_dependence(pair, omega, EXACT)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 8), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_restricted_dependence_and_converse(m, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, m - 1)
    b = rng.integers(-2, 3, size=(m, r)) * (rng.random((m, r)) < 0.5)
    if np.linalg.matrix_rank(b) < r:
        return
    psibar = sparsity_number(b, tol=EXACT)
    k = int(rng.integers(1, r + 2))
    v = b @ rng.integers(-2, 3, size=(r, k))
    full = restricted_dependence(v, range(m), EXACT)
    for size in range(psibar + 1, m + 1):
        omega = rng.choice(m, size=size, replace=False)
        assert restricted_dependence(v, omega, EXACT) == full
    if full:
        # dependence survives every restriction
        for size in range(1, m + 1):
            assert restricted_dependence(v, rng.choice(m, size=size, replace=False), EXACT)


def test_row_space_is_transpose_column_space():
    a = named_fixture("B").matrix
    assert row_space(a).k == column_space(a.T).k == 2
