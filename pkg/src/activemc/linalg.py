"""Numerical kernels shared by every completion routine.

All routines work on plain ``numpy`` arrays. An optional exact mode backed by
``sympy`` rationals is available for small integer-valued fixtures, where a
floating point rank decision would be a matter of luck rather than fact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import sympy


class RankDeficientError(ValueError):
    """Raised when a restricted basis cannot determine a column uniquely."""


class UnobservedEntryError(LookupError):
    """Raised when code reads an entry that was never observed."""


@dataclass(frozen=True)
class Tolerance:
    """Rank and residual decision rule.

    Parameters
    ----------
    rtol : float
        Relative threshold. A singular value (or residual) counts as zero
        when it is at most ``rtol * max(shape) * scale``.
    exact : bool
        Use rational arithmetic. Only sensible for small integer fixtures.
    """

    rtol: float = 1e-9
    exact: bool = False

    def cutoff(self, scale: float, dim: int) -> float:
        return self.rtol * max(int(dim), 1) * float(scale)

    @classmethod
    def for_matrix(cls, matrix, rtol: float = 1e-9, max_exact_size: int = 400) -> "Tolerance":
        """Pick exact mode for small integer-valued matrices, floating point otherwise."""
        a = np.asarray(matrix, dtype=float)
        integral = bool(np.all(np.isfinite(a)) and np.all(a == np.round(a)))
        return cls(rtol=rtol, exact=integral and a.size <= max_exact_size)


def to_rational(a) -> sympy.Matrix:
    """Convert a real array to a sympy matrix with exact rational entries."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rows = [[sympy.Integer(int(v)) if v == int(v) else sympy.Rational(float(v)) for v in row]
            for row in a]
    return sympy.Matrix(a.shape[0], a.shape[1], lambda i, j: rows[i][j])


def _rational_to_float(mat: sympy.Matrix) -> np.ndarray:
    return np.array([[float(mat[i, j]) for j in range(mat.cols)] for i in range(mat.rows)],
                    dtype=float).reshape(mat.rows, mat.cols)


@dataclass(frozen=True)
class OrthonormalBasis:
    """An ``m x k`` matrix with orthonormal columns.

    In exact mode ``span`` additionally holds rational, linearly independent
    columns spanning the same space; the float ``vectors`` are derived from it.
    """

    vectors: np.ndarray
    span: Optional[sympy.Matrix] = field(default=None, compare=False)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    @property
    def exact(self) -> bool:
        return self.span is not None

    def projector_diag(self) -> np.ndarray:
        """Squared row norms, i.e. ``||P e_j||^2`` for every coordinate."""
        return np.sum(self.vectors ** 2, axis=1)

    def extended(self, v, tol: Tolerance = Tolerance()) -> "OrthonormalBasis":
        """Return the basis with ``v`` appended, or ``self`` if ``v`` is dependent."""
        v = np.asarray(v, dtype=float).reshape(-1, 1)
        if tol.exact:
            span = self.span if self.span is not None else sympy.zeros(self.m, 0)
            cand = span.row_join(to_rational(v))
            if cand.rank() == span.cols:
                return self
            return _basis_from_span(cand)
        res = v[:, 0].copy()
        nv = np.linalg.norm(res)
        if nv == 0:
            return self
        for _ in range(2):
            res -= self.vectors @ (self.vectors.T @ res)
        nr = np.linalg.norm(res)
        if nr <= tol.cutoff(nv, self.m):
            return self
        return OrthonormalBasis(np.column_stack([self.vectors, res / nr]))


def empty_basis(m: int, exact: bool = False) -> OrthonormalBasis:
    return OrthonormalBasis(np.zeros((m, 0)), sympy.zeros(m, 0) if exact else None)


def _basis_from_span(span: sympy.Matrix) -> OrthonormalBasis:
    if span.cols == 0:
        return OrthonormalBasis(np.zeros((span.rows, 0)), span)
    q, _ = np.linalg.qr(_rational_to_float(span))
    return OrthonormalBasis(q, span)


def orthonormalize(vectors, tol: Tolerance = Tolerance()) -> OrthonormalBasis:
    """Orthonormal basis for the span of the columns of ``vectors``.

    Columns are processed in order; a column that is dependent on the ones
    kept so far (per ``tol``) is dropped. An empty input gives ``k = 0``.

    Parameters
    ----------
    vectors : array_like, shape (m, s)
    tol : Tolerance

    Returns
    -------
    OrthonormalBasis
    """
    a = np.asarray(vectors, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    m = a.shape[0]
    if tol.exact:
        span = sympy.zeros(m, 0)
        rank = 0
        for j in range(a.shape[1]):
            cand = span.row_join(to_rational(a[:, j:j + 1]))
            if cand.rank() > rank:
                span, rank = cand, rank + 1
        return _basis_from_span(span)
    basis = empty_basis(m)
    for j in range(a.shape[1]):
        basis = basis.extended(a[:, j], tol)
    return basis


def _independent_columns(mat: sympy.Matrix) -> sympy.Matrix:
    _, pivots = mat.rref()
    return mat.extract(list(range(mat.rows)), list(pivots))


def _exact_projection(b: sympy.Matrix, x: sympy.Matrix):
    """Exact least squares coefficients and projection of ``x`` onto ``span(b)``."""
    b = _independent_columns(b) if b.cols else b
    if b.cols == 0:
        return b, sympy.zeros(0, 1), sympy.zeros(x.rows, 1)
    coef = (b.T * b).LUsolve(b.T * x)
    return b, coef, b * coef


def restricted_residual(basis: OrthonormalBasis, rows: Sequence[int], x_rows,
                        tol: Tolerance = Tolerance()) -> float:
    """Norm of ``x_rows`` minus its projection onto the restricted basis.

    The restricted basis is ``basis.vectors[rows]`` which need not have
    orthonormal columns; the projection is computed by a rank-revealing QR.
    With an empty basis the result is ``||x_rows||``.
    """
    rows = np.asarray(rows, dtype=int)
    x = np.asarray(x_rows, dtype=float).reshape(-1)
    if basis.k == 0 or len(rows) == 0:
        return float(np.linalg.norm(x))
    if tol.exact and basis.exact:
        b = basis.span.extract(rows.tolist(), list(range(basis.span.cols)))
        xr = to_rational(x.reshape(-1, 1))
        _, _, proj = _exact_projection(b, xr)
        diff = xr - proj
        return float(sympy.sqrt((diff.T * diff)[0, 0]))
    q = basis.vectors[rows]
    qf, rf, _ = scipy.linalg.qr(q, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rf))
    rank = int(np.sum(diag > tol.cutoff(diag[0], max(q.shape)))) if diag.size and diag[0] > 0 else 0
    qr_ = qf[:, :rank]
    res = x - qr_ @ (qr_.T @ x)
    return float(np.linalg.norm(res))


def residual_detects(basis: OrthonormalBasis, rows: Sequence[int], x_rows,
                     tol: Tolerance = Tolerance()) -> bool:
    """True when ``x_rows`` is not explained by the restricted basis.

    The decision is ``residual > tau * ||x_rows||`` with
    ``tau = tol.rtol * max(m, |rows|)``; in exact mode it is ``residual != 0``.
    """
    x = np.asarray(x_rows, dtype=float).reshape(-1)
    res = restricted_residual(basis, rows, x, tol)
    if tol.exact and basis.exact:
        return res != 0.0
    return res > tol.cutoff(np.linalg.norm(x), max(basis.m, len(x)))


def reconstruct_column(basis: OrthonormalBasis, rows: Sequence[int], observed,
                       tol: Tolerance = Tolerance(), allow_deficient: bool = False) -> np.ndarray:
    """Lift a partially observed column back into the full space.

    Solves ``basis[rows] c = observed`` in the least squares sense and
    returns ``basis @ c``.

    Raises
    ------
    RankDeficientError
        If ``basis[rows]`` has rank below ``basis.k`` and ``allow_deficient``
        is false. With ``allow_deficient`` the minimum norm solution is used,
        i.e. the pseudo-inverse back-projection.
    """
    rows = np.asarray(rows, dtype=int)
    obs = np.asarray(observed, dtype=float).reshape(-1)
    if basis.k == 0:
        return np.zeros(basis.m)
    if tol.exact and basis.exact:
        span = basis.span
        b = span.extract(rows.tolist(), list(range(span.cols)))
        if b.rank() < span.cols:
            if not allow_deficient:
                raise RankDeficientError("restricted basis is rank deficient")
            coef = b.pinv() * to_rational(obs.reshape(-1, 1))
        else:
            coef = (b.T * b).LUsolve(b.T * to_rational(obs.reshape(-1, 1)))
        return _rational_to_float(span * coef).reshape(-1)
    q = basis.vectors[rows]
    s = np.linalg.svd(q, compute_uv=False)
    cutoff = tol.cutoff(s[0], max(q.shape)) if s.size else 0.0
    if s.size < basis.k or np.sum(s > cutoff) < basis.k:
        if not allow_deficient:
            raise RankDeficientError("restricted basis is rank deficient")
    coef = np.linalg.lstsq(q, obs, rcond=tol.rtol * max(q.shape))[0]
    return basis.vectors @ coef


def numeric_rank(matrix, tol: Tolerance = Tolerance()) -> int:
    """Rank with singular values below ``rtol * max(m, n) * sigma_max`` treated as zero."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.size == 0:
        return 0
    if tol.exact:
        return int(to_rational(a).rank())
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol.cutoff(s[0], max(a.shape))))


def is_nonsingular(square, tol: Tolerance = Tolerance()) -> bool:
    a = np.atleast_2d(np.asarray(square, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        return True
    return numeric_rank(a, tol) == a.shape[0]


class PartialMatrix:
    """Observed entries of an ``m x n`` matrix.

    Unobserved entries hold NaN internally, but reading one through
    :meth:`get` or :meth:`column` raises :class:`UnobservedEntryError`
    instead of silently propagating the sentinel.
    """

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)
        self._values = np.full(self.shape, np.nan)
        self._mask = np.zeros(self.shape, dtype=bool)

    @property
    def mask(self) -> np.ndarray:
        return self._mask.copy()

    def is_observed(self, i: int, j: int) -> bool:
        return bool(self._mask[i, j])

    def set(self, i, j, value) -> None:
        self._values[i, j] = value
        self._mask[i, j] = True

    def get(self, i: int, j: int) -> float:
        if not self._mask[i, j]:
            raise UnobservedEntryError(f"entry ({i}, {j}) was not observed")
        return float(self._values[i, j])

    def column(self, j: int, rows=None) -> np.ndarray:
        rows = np.arange(self.shape[0]) if rows is None else np.asarray(rows, dtype=int)
        if not np.all(self._mask[rows, j]):
            missing = rows[~self._mask[rows, j]]
            raise UnobservedEntryError(f"column {j} has unobserved rows {missing.tolist()}")
        return self._values[rows, j].copy()

    def block(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        sub = self._mask[np.ix_(rows, cols)]
        if not np.all(sub):
            raise UnobservedEntryError("block contains unobserved entries")
        return self._values[np.ix_(rows, cols)].copy()

    def unobserved_rows(self, j: int) -> np.ndarray:
        return np.flatnonzero(~self._mask[:, j])

    def count(self) -> int:
        return int(self._mask.sum())
