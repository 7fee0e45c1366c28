"""Synthetic ground-truth matrices and the small worked fixtures.

Random low-rank matrices are products of standard normal factors. Coherent
spaces are produced by overwriting rows (or columns) of a lower-rank matrix
with fresh random vectors: each overwritten row ``i`` puts ``e_i`` into the
column space, which drives the column-space coherence to its maximum ``m/r``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .sparsity import SubspaceProfile, matrix_profiles


def gen_gaussian_lowrank(m: int, n: int, r: int, seed=None) -> np.ndarray:
    """``X @ Y`` with standard normal ``X`` (m x r) and ``Y`` (r x n).

    ``r = 0`` gives the zero matrix.
    """
    if r < 0 or r > min(m, n):
        raise ValueError(f"rank {r} not in [0, {min(m, n)}]")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((m, r))
    y = rng.standard_normal((r, n))
    return x @ y


def make_column_space_coherent(matrix, c: int = 1, seed=None) -> np.ndarray:
    """Overwrite ``c`` random rows with standard normal vectors.

    Each overwritten row index ``i`` ends up with ``e_i`` in the column space
    (as long as the final rank is the input rank plus ``c``), so the column
    space has coherence ``m / r``.
    """
    a = np.array(matrix, dtype=float)
    m, n = a.shape
    if c < 0 or c >= m:
        raise ValueError(f"need 0 <= c < m, got c={c}, m={m}")
    rng = np.random.default_rng(seed)
    rows = rng.choice(m, size=c, replace=False)
    for i in rows:
        a[i, :] = rng.standard_normal(n)
    return a


def make_row_space_coherent(matrix, c: int = 1, seed=None) -> np.ndarray:
    """Overwrite ``c`` random columns; the transposed counterpart of :func:`make_column_space_coherent`."""
    a = np.asarray(matrix, dtype=float)
    if c < 0 or c >= a.shape[1]:
        raise ValueError(f"need 0 <= c < n, got c={c}, n={a.shape[1]}")
    return make_column_space_coherent(a.T, c, seed).T.copy()


def gen_coherent_lowrank(m: int, n: int, r: int, coherent_cols: int = 0, coherent_rows: int = 0,
                         seed=None) -> np.ndarray:
    """Rank ``r`` matrix with chosen numbers of standard vectors in its column and row spaces.

    A Gaussian matrix of rank ``r - coherent_cols - coherent_rows`` gets
    ``coherent_cols`` rows overwritten (column space coherent), then
    ``coherent_rows`` columns overwritten (row space coherent).
    """
    base = r - coherent_cols - coherent_rows
    if base < 0:
        raise ValueError("rank too small for the requested number of coherent directions")
    ss = np.random.SeedSequence(seed)
    s0, s1, s2 = ss.spawn(3)
    a = gen_gaussian_lowrank(m, n, base, s0)
    if coherent_cols:
        a = make_column_space_coherent(a, coherent_cols, s1)
    if coherent_rows:
        a = make_row_space_coherent(a, coherent_rows, s2)
    return a


def generic_profiles(m: int, n: int, r: int, coherent_cols: int = 0, coherent_rows: int = 0):
    """Column and row space profiles that :func:`gen_coherent_lowrank` produces with probability one.

    A generic space has ``psibar = r - 1``; a space containing a standard
    vector has ``psi = 1`` and coherence ``m / r``. The coherence of a generic
    space is not a closed form and is reported as NaN.
    """
    def prof(dim, coherent):
        if coherent:
            return SubspaceProfile(m=dim, r=r, psi=1, psibar=dim - 1, mu=dim / r, exact=True)
        return SubspaceProfile(m=dim, r=r, psi=dim - r + 1, psibar=r - 1, mu=float("nan"), exact=True)

    return prof(m, coherent_cols > 0), prof(n, coherent_rows > 0)


def normalize_columns(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero column")
    return a / norms


def inject_sparse_noise_columns(matrix, a: int, seed=None) -> Tuple[np.ndarray, frozenset]:
    """Replace ``a`` uniformly chosen columns by standard normal vectors.

    Returns the noisy matrix and the set of replaced column indices.
    """
    out = np.array(matrix, dtype=float)
    n = out.shape[1]
    if a < 0 or a > n:
        raise ValueError(f"need 0 <= a <= n, got a={a}")
    rng = np.random.default_rng(seed)
    cols = np.sort(rng.choice(n, size=a, replace=False))
    for j in cols:
        out[:, j] = rng.standard_normal(out.shape[0])
    return out, frozenset(int(j) for j in cols)


def inject_bounded_noise(matrix, eps: float, seed=None) -> np.ndarray:
    """Normalize columns to unit norm, then add to each column a random vector of norm ``U[0, eps]``.

    The perturbation direction is isotropic.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    clean = normalize_columns(matrix)
    m, n = clean.shape
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((m, n))
    g /= np.linalg.norm(g, axis=0)
    return clean + g * rng.uniform(0.0, eps, size=n)


@dataclass(frozen=True)
class Fixture:
    name: str
    matrix: np.ndarray
    costs: Optional[np.ndarray] = None

    def profiles(self):
        """Exact column and row space profiles (rational arithmetic)."""
        from .linalg import Tolerance
        return matrix_profiles(self.matrix, Tolerance.for_matrix(self.matrix))


_ERHC_COSTS = [[1, 1, 4, 1], [1, 5, 3, 4], [4, 3, 4, 4], [1, 4, 4, 8]]

_FIXTURES = {
    "A": [[1, 2, 2, 2, 2, 2], [0, 2, 2, 2, 2, 2], [0, 2, 2, 2, 2, 2], [0, 2, 2, 2, 2, 2]],
    "B": [[1, 0, 1, 2, 3, 4], [0, 1, 2, 3, 4, 5], [0, 1, 2, 3, 4, 5], [0, 1, 2, 3, 4, 5]],
    "tightness": [[1, 2, 5], [1, 2, 4], [1, 0, 4], [1, 0, 4]],
    "erhc-greedy-gap": [[1, 1, 2, 3], [1, 2, 3, 4], [1, 3, 4, 5], [1, 4, 5, 6]],
    "erhc-greedy-optimal": [[1, 1, 2, 2], [1, 2, 2, 3], [1, 3, 2, 4], [1, 4, 2, 5]],
    "walkthrough": [[0, 0, 0, 0], [0, 0, 0, 0], [1, 3, 2, 3], [0, 0, 0, 0], [0, 0, 0, 0],
                    [2, 6, 4, 6]],
}


def erhc_tightness_costs(eps: float) -> np.ndarray:
    """6 x 6 cost table on which the row-sum greedy pays close to twice the optimum.

    Greedy costs ``80 - 8 eps + 12 eps/100`` and the best two-stage plan
    ``40 + 16 eps/100``.
    """
    e = eps / 100.0
    hi = 10.0 - eps
    return np.array([
        [e, e, e, e, hi, hi],
        [e, e, e, e, hi, hi],
        [10, 10, e, e, e, e],
        [10, 10, e, e, e, e],
        [e, e, 10, 10, hi, hi],
        [e, e, 10, 10, hi, hi],
    ], dtype=float)


def named_fixture(name: str, eps: float = 0.25) -> Fixture:
    """Small integer fixtures used throughout the tests and demos.

    Names: ``"A"``, ``"B"`` (same column space, different row spaces),
    ``"tightness"`` (sparsity number ``m - 1``), ``"erhc-greedy-gap"`` and
    ``"erhc-greedy-optimal"`` (4 x 4 with a cost table), ``"erhc-tightness"``
    (6 x 6 rank-2 matrix with ``psibar = 1`` and the cost family for ``eps``),
    ``"walkthrough"`` (6 x 4 rank one).
    """
    if name == "erhc-tightness":
        i = np.arange(1, 7, dtype=float)
        # every nonzero vector a + b*i has at most one zero, so psibar = 1
        return Fixture(name, 1.0 + np.outer(i, i), erhc_tightness_costs(eps))
    if name not in _FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    costs = np.array(_ERHC_COSTS, dtype=float) if name.startswith("erhc") else None
    return Fixture(name, np.array(_FIXTURES[name], dtype=float), costs)


FIXTURE_NAMES = tuple(_FIXTURES) + ("erhc-tightness",)
