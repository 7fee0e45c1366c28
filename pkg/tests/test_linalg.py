import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from activemc.linalg import (PartialMatrix, RankDeficientError, Tolerance, UnobservedEntryError, empty_basis,
                             is_nonsingular, numeric_rank, orthonormalize, reconstruct_column,
                             residual_detects, restricted_residual, to_rational)
from activemc.matrixio import (read_costs_csv, read_mask_csv, read_matrix_csv, write_mask_csv,
                               write_matrix_csv)

EXACT = Tolerance(exact=True)
small_int = arrays(np.int64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.integers(-3, 3))


def test_tolerance_cutoff():
    assert Tolerance(rtol=1e-6).cutoff(2.0, 10) == pytest.approx(2e-5)
    assert Tolerance().cutoff(1.0, 0) == Tolerance().cutoff(1.0, 1)


def test_for_matrix_picks_exact_for_small_integers():
    assert Tolerance.for_matrix([[1, 2], [3, 4]]).exact
    assert not Tolerance.for_matrix([[1.5, 2], [3, 4]]).exact
    assert not Tolerance.for_matrix(np.ones((30, 30))).exact


def test_to_rational_keeps_exact_values():
    q = to_rational([[1, 0.5], [-2, 0.25]])
    assert q == sympy.Matrix([[1, sympy.Rational(1, 2)], [-2, sympy.Rational(1, 4)]])


@settings(max_examples=60, deadline=None)
@given(small_int)
def test_numeric_rank_matches_rational_rank(a):
    # small integer matrices are well conditioned enough for the float rank to be exact
    assert numeric_rank(a) == sympy.Matrix(a.tolist()).rank()
    assert numeric_rank(a, EXACT) == sympy.Matrix(a.tolist()).rank()


def test_numeric_rank_edge_cases():
    assert numeric_rank(np.zeros((3, 4))) == 0
    assert numeric_rank(np.zeros((0, 4))) == 0
    assert is_nonsingular(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        is_nonsingular(np.ones((2, 3)))


@pytest.mark.parametrize("tol", [Tolerance(), EXACT])
def test_orthonormalize_drops_dependent_columns(tol):
    v = np.array([[1, 2, 0], [1, 2, 1], [0, 0, 1], [1, 2, 0]], dtype=float)
    b = orthonormalize(v, tol)
    assert b.k == 2
    assert np.allclose(b.vectors.T @ b.vectors, np.eye(2))
    # every input column is in the span
    for j in range(3):
        x = v[:, j]
        assert np.allclose(b.vectors @ (b.vectors.T @ x), x)
    assert b.exact == tol.exact


def test_empty_inputs():
    b = orthonormalize(np.zeros((4, 0)))
    assert b.k == 0 and b.m == 4
    assert orthonormalize(np.zeros((3, 2))).k == 0
    assert restricted_residual(empty_basis(3), [0, 2], [3.0, 4.0]) == pytest.approx(5.0)
    assert np.array_equal(reconstruct_column(empty_basis(3), [0], [1.0]), np.zeros(3))


def test_extended_is_noop_for_dependent_vector():
    b = orthonormalize(np.array([[1.0], [1.0], [0.0]]))
    assert b.extended([2.0, 2.0, 0.0]) is b
    assert b.extended([0.0, 0.0, 0.0]) is b
    assert b.extended([0.0, 0.0, 1.0]).k == 2


@pytest.mark.parametrize("tol", [Tolerance(), EXACT])
def test_restricted_residual_and_detection(tol):
    u = np.array([[1, 0], [1, 1], [0, 1], [2, 1]], dtype=float)
    b = orthonormalize(u, tol)
    inside = u @ np.array([2.0, -1.0])
    rows = [0, 1, 3]
    assert restricted_residual(b, rows, inside[rows], tol) == pytest.approx(0.0, abs=1e-12)
    assert not residual_detects(b, rows, inside[rows], tol)
    outside = np.array([1.0, 0.0, 0.0, 0.0])
    assert residual_detects(b, rows, outside[rows], tol)
    assert restricted_residual(b, rows, outside[rows], tol) > 0.1


def test_residual_on_rank_deficient_restriction():
    # rows 0 and 1 only see a one-dimensional restriction of a 2-dim basis
    u = np.array([[1, 1], [1, 1], [0, 1]], dtype=float)
    b = orthonormalize(u)
    assert restricted_residual(b, [0, 1], [3.0, 3.0]) == pytest.approx(0.0, abs=1e-12)
    assert restricted_residual(b, [0, 1], [1.0, -1.0]) == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("tol", [Tolerance(), EXACT])
def test_reconstruct_column(tol):
    u = np.array([[1, 0], [1, 1], [0, 1], [2, 1], [3, -1]], dtype=float)
    b = orthonormalize(u, tol)
    x = u @ np.array([1.0, 3.0])
    rows = [1, 2]
    assert np.allclose(reconstruct_column(b, rows, x[rows], tol), x)
    with pytest.raises(RankDeficientError):
        reconstruct_column(b, [2], x[[2]], tol)
    # pseudo-inverse lift when allowed: consistent on the observed rows
    y = reconstruct_column(b, [2], x[[2]], tol, allow_deficient=True)
    assert y[2] == pytest.approx(x[2])


def test_partial_matrix():
    p = PartialMatrix((3, 2))
    assert p.count() == 0
    with pytest.raises(UnobservedEntryError):
        p.get(0, 0)
    p.set(0, 1, 5.0)
    p.set(2, 1, -1.0)
    assert p.get(0, 1) == 5.0
    assert p.is_observed(2, 1) and not p.is_observed(1, 1)
    assert np.array_equal(p.unobserved_rows(1), [1])
    assert np.array_equal(p.column(1, [0, 2]), [5.0, -1.0])
    with pytest.raises(UnobservedEntryError):
        p.column(1)
    with pytest.raises(UnobservedEntryError):
        p.block([0, 1], [1])
    assert p.count() == 2
    m = p.mask
    m[:] = True
    assert p.count() == 2  # mask is a copy


def test_csv_round_trip(tmp_path):
    a = np.array([[1.0, -2.5, 1 / 3], [0.0, 1e-12, 7.0]])
    write_matrix_csv(tmp_path / "a.csv", a)
    assert np.array_equal(read_matrix_csv(tmp_path / "a.csv"), a)
    mask = a > 0.5
    write_mask_csv(tmp_path / "m.csv", mask)
    assert np.array_equal(read_mask_csv(tmp_path / "m.csv"), mask)
    (tmp_path / "bad.csv").write_text("0,2\n1,1\n")
    with pytest.raises(ValueError):
        read_mask_csv(tmp_path / "bad.csv")


def test_cost_csv(tmp_path):
    (tmp_path / "c.csv").write_text("1,2,3\n")
    assert read_costs_csv(tmp_path / "c.csv", (4, 3)).shape == (1, 3)
    (tmp_path / "neg.csv").write_text("1,-2\n")
    with pytest.raises(ValueError):
        read_costs_csv(tmp_path / "neg.csv")
    with pytest.raises(ValueError):
        read_costs_csv(tmp_path / "c.csv", (2, 2))
