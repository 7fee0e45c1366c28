"""Sparsity numbers and coherence of subspaces.

For an ``r``-dimensional subspace ``U`` of ``R^m``:

* the nonsparsity ``psi(U)`` is the smallest support size of a nonzero vector in ``U``;
* the sparsity ``psibar(U) = m - psi(U)`` is the largest number of zeros such a vector can have;
* the coherence ``mu(U) = (m / r) max_j ||P_U e_j||^2``.

Computing ``psi`` is a sparsest-vector problem, so the exact routines enumerate
row subsets and are only meant for small ambient dimension.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, List

import numpy as np
import sympy

from .linalg import OrthonormalBasis, Tolerance, numeric_rank, orthonormalize

EXHAUSTIVE_ROW_LIMIT = 22
KERNEL_SUBSET_LIMIT = 2_000_000


class EstimateOnlyError(ValueError):
    """Exact computation is out of reach; use :func:`nonsparsity_lower_bound` instead."""


@dataclass(frozen=True)
class SubspaceProfile:
    """Rank, nonsparsity, sparsity and coherence of one subspace.

    ``exact`` is False when ``psi`` is only a lower bound (and ``psibar`` the
    matching upper bound).
    """

    m: int
    r: int
    psi: int
    psibar: int
    mu: float
    exact: bool = True

    def as_dict(self) -> dict:
        return {"m": self.m, "r": self.r, "psi": self.psi, "psibar": self.psibar,
                "mu": self.mu, "exact": self.exact}


def as_basis(subspace, tol: Tolerance = Tolerance()) -> OrthonormalBasis:
    """Accept an :class:`OrthonormalBasis` or an array whose columns span the subspace."""
    if isinstance(subspace, OrthonormalBasis):
        return subspace
    return orthonormalize(np.asarray(subspace, dtype=float), tol)


def column_space(matrix, tol: Tolerance = Tolerance()) -> OrthonormalBasis:
    return orthonormalize(np.asarray(matrix, dtype=float), tol)


def row_space(matrix, tol: Tolerance = Tolerance()) -> OrthonormalBasis:
    return orthonormalize(np.asarray(matrix, dtype=float).T, tol)


def coherence(subspace) -> float:
    """Coherence ``(m/r) max_j ||P_U e_j||^2``.

    Raises
    ------
    ValueError
        For the zero subspace.
    """
    basis = as_basis(subspace)
    if basis.k == 0:
        raise ValueError("coherence is undefined for the zero subspace")
    return float(basis.m / basis.k * np.max(basis.projector_diag()))


def _subsets(m: int, size: int) -> Iterator[tuple]:
    return itertools.combinations(range(m), size)


def _chunks(it, size):
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def _max_zeros_kernel_float(b: np.ndarray, tol: Tolerance) -> int:
    m, r = b.shape
    cut = tol.cutoff(1.0, m)
    best = 0
    for chunk in _chunks(_subsets(m, r - 1), 4096):
        if r == 1:
            kernels = np.ones((1, 1))
        else:
            sub = b[np.array(chunk)]  # (batch, r-1, r)
            _, s, vt = np.linalg.svd(sub, full_matrices=True)
            ok = s[:, -1] > cut
            if not np.any(ok):
                continue
            kernels = vt[ok, -1, :]
        lifted = kernels @ b.T  # (batch, m), unit norm rows
        zeros = np.sum(np.abs(lifted) <= cut, axis=1)
        best = max(best, int(zeros.max()))
    return best


def _max_zeros_kernel_exact(b: sympy.Matrix) -> int:
    m, r = b.shape
    best = 0
    for rows in _subsets(m, r - 1):
        sub = b.extract(list(rows), list(range(r))) if rows else sympy.zeros(0, r)
        null = sub.nullspace() if rows else [sympy.eye(r)[:, 0]]
        if len(null) != 1:
            continue
        x = b * null[0]
        best = max(best, sum(1 for v in x if v == 0))
    return best


def _max_zeros_subsets_float(b: np.ndarray, tol: Tolerance) -> int:
    m, r = b.shape
    cut = tol.cutoff(1.0, m)
    for size in range(m - 1, r - 2, -1):
        if size < r:
            return size
        for chunk in _chunks(_subsets(m, size), 4096):
            s = np.linalg.svd(b[np.array(chunk)], compute_uv=False)
            if np.any(s[:, -1] <= cut):
                return size
    return max(r - 1, 0)


def _max_zeros_subsets_exact(b: sympy.Matrix) -> int:
    m, r = b.shape
    for size in range(m - 1, r - 1, -1):
        for rows in _subsets(m, size):
            if b.extract(list(rows), list(range(r))).rank() < r:
                return size
    return r - 1


def sparsity_number(subspace, method: str = "auto", tol: Tolerance = Tolerance(),
                    max_rows: int = EXHAUSTIVE_ROW_LIMIT,
                    max_subsets: int = KERNEL_SUBSET_LIMIT) -> int:
    """Largest number of zero coordinates of a nonzero vector in the subspace.

    Parameters
    ----------
    subspace : OrthonormalBasis or array_like
    method : {"auto", "kernel", "zero-set"}
        ``"zero-set"`` searches row subsets ``Z`` by decreasing size for the
        first one with ``rank(B_Z) < r``. ``"kernel"`` enumerates the
        ``(r-1)``-row subsets, lifts each one-dimensional kernel back to
        ``R^m`` and counts its zeros. Both are exact: a maximal zero set always
        has rank exactly ``r - 1``, so it contains an ``(r-1)``-subset with the
        same kernel.
    tol : Tolerance
        In exact mode the computation uses rational arithmetic.
    max_rows, max_subsets : int
        Feasibility limits for the two methods.

    Raises
    ------
    EstimateOnlyError
        When neither method is within its limit.
    """
    basis = as_basis(subspace, tol)
    m, r = basis.m, basis.k
    if r == 0:
        raise ValueError("sparsity number is undefined for the zero subspace")
    kernel_ok = math.comb(m, r - 1) <= max_subsets
    subset_ok = m <= max_rows
    if method == "auto":
        method = "kernel" if kernel_ok else ("zero-set" if subset_ok else "")
    if method == "kernel" and not kernel_ok or method == "zero-set" and not subset_ok or not method:
        raise EstimateOnlyError(
            f"exact sparsity number out of reach for m={m}, r={r}; use nonsparsity_lower_bound")
    exact = tol.exact and basis.exact
    if method == "kernel":
        return _max_zeros_kernel_exact(basis.span) if exact else _max_zeros_kernel_float(basis.vectors, tol)
    if method == "zero-set":
        return _max_zeros_subsets_exact(basis.span) if exact else _max_zeros_subsets_float(basis.vectors, tol)
    raise ValueError(f"unknown method {method!r}")


def nonsparsity_number_exact(subspace, method: str = "auto", tol: Tolerance = Tolerance(),
                             **limits) -> int:
    """Smallest support size of a nonzero vector in the subspace, ``m - psibar``."""
    basis = as_basis(subspace, tol)
    return basis.m - sparsity_number(basis, method=method, tol=tol, **limits)


def nonsparsity_lower_bound(subspace) -> int:
    """Cheap lower bound on ``psi``: ``max(1, (m/r)/mu)``."""
    basis = as_basis(subspace)
    mu = coherence(basis)
    return max(1, int(math.ceil(basis.m / basis.k / mu - 1e-9)))


def subspace_profile(subspace, tol: Tolerance = Tolerance(), **limits) -> SubspaceProfile:
    """Profile of a subspace, falling back to the coherence bound when exact ``psi`` is out of reach."""
    basis = as_basis(subspace, tol)
    mu = coherence(basis)
    try:
        psi = nonsparsity_number_exact(basis, tol=tol, **limits)
        exact = True
    except EstimateOnlyError:
        psi = nonsparsity_lower_bound(basis)
        exact = False
    return SubspaceProfile(m=basis.m, r=basis.k, psi=psi, psibar=basis.m - psi, mu=mu, exact=exact)


def matrix_profiles(matrix, tol: Tolerance = Tolerance(), **limits):
    """Column-space and row-space profiles of a matrix."""
    a = np.asarray(matrix, dtype=float)
    return (subspace_profile(column_space(a, tol), tol, **limits),
            subspace_profile(row_space(a, tol), tol, **limits))


def validate_profile(profile: SubspaceProfile, rtol: float = 1e-9) -> List[str]:
    """List the structural inequalities a profile violates (empty when consistent)."""
    m, r, psi, psibar, mu = profile.m, profile.r, profile.psi, profile.psibar, profile.mu
    out = []
    if psibar != m - psi:
        out.append("ψ̄ ≠ m−ψ")
    if r >= 1:
        if psibar < r - 1:
            out.append("ψ̄ < r−1")
        if psibar > m - 1:
            out.append("ψ̄ > m−1")
        slack = rtol * max(1.0, m / r)
        if mu < 1 - slack:
            out.append("μ < 1")
        if mu > m / r + slack:
            out.append("μ > m/r")
        if psi >= 1 and mu < (m / r) / psi - slack:
            out.append("μ < (m/r)/ψ")
    return out


def restricted_dependence(vectors, rows, tol: Tolerance = Tolerance()) -> bool:
    """True when the columns of ``vectors`` restricted to ``rows`` are linearly dependent."""
    v = np.asarray(vectors, dtype=float)
    sub = v[np.asarray(rows, dtype=int)]
    return numeric_rank(sub, tol) < v.shape[1]
