"""Exact recovery when entries have different prices.

A two-stage plan observes a row set ``R`` in full and then a column basis
``C`` in full; every other column is rebuilt from its entries in ``R``. Its
price is ``chi(R, :) + chi(:, C) - chi(R, C)``.

The greedy plan takes the ``psibar + 1`` cheapest rows and then scans the
columns from cheapest to most expensive remaining part, keeping each column
that is independent of those already kept. Given ``R`` this is a matroid
greedy and therefore picks the cheapest basis; over ``R`` it is within a
factor two of the best plan. With per-column prices it is optimal.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .algorithms import CompletionResult, _column_pass, _finish
from .linalg import Tolerance, numeric_rank, to_rational
from .oracle import CostModel, ObservationOracle


@dataclass(frozen=True)
class TwoStagePlan:
    rows: Tuple[int, ...]
    order: Optional[Tuple[int, ...]]
    columns: Tuple[int, ...]
    cost: float


def plan_cost(costs, rows: Sequence[int], cols: Sequence[int]) -> float:
    """``chi(R, :) + chi(:, C) - chi(R, C)``."""
    c = np.asarray(costs, dtype=float)
    rows, cols = list(rows), list(cols)
    return float(c[rows, :].sum() + c[:, cols].sum() - c[np.ix_(rows, cols)].sum())


def _greedy(oracle: ObservationOracle, psibar: int, table: np.ndarray, tol: Tolerance):
    m, n = oracle.shape
    d = psibar + 1
    if d > m:
        raise ValueError(f"psibar + 1 = {d} exceeds the number of rows {m}")
    rows = sorted(int(i) for i in np.argsort(table.sum(axis=1), kind="stable")[:d])
    outside = np.setdiff1d(np.arange(m), rows)
    order = [int(j) for j in np.argsort(table[outside].sum(axis=0), kind="stable")]
    oracle.set_phase("rows")
    oracle.observe_block(rows, np.arange(n))
    oracle.set_phase("columns")
    rec, basis, full = _column_pass(oracle, rows, tol, order=order)
    plan = TwoStagePlan(tuple(rows), tuple(order), tuple(full), oracle.stats.cost)
    return _finish(oracle, rec, basis.k, phases=1, details={"plan": plan, "omega": rows})


def run_erhc(oracle: ObservationOracle, psibar: int, costs=None,
             tol: Tolerance = Tolerance()) -> CompletionResult:
    """Greedy two-stage recovery under per-entry prices.

    Parameters
    ----------
    oracle : ObservationOracle
        Its cost model is used when ``costs`` is omitted.
    psibar : int
        Column-space sparsity number (or an upper bound on it).
    costs : array_like, optional
        ``m x n`` price table.

    Returns
    -------
    CompletionResult
        ``details["plan"]`` holds the :class:`TwoStagePlan`; ``stats.cost``
        is the price paid.
    """
    table = oracle.cost_model.table(oracle.shape) if costs is None else np.asarray(costs, dtype=float)
    return _greedy(oracle, psibar, table, tol)


def run_erhc_column_costs(oracle: ObservationOracle, psibar: int, column_costs=None,
                          tol: Tolerance = Tolerance()) -> CompletionResult:
    """Two-stage recovery when every entry of column ``j`` costs ``chi_j``.

    Rows are interchangeable here, so the first ``psibar + 1`` rows are
    used and columns are scanned by increasing price.
    """
    if column_costs is None:
        if oracle.cost_model.kind != "per_column":
            raise ValueError("oracle does not carry per-column costs")
        column_costs = oracle.cost_model.values
    cc = np.asarray(column_costs, dtype=float).reshape(-1)
    return _greedy(oracle, psibar, np.tile(cc, (oracle.m, 1)), tol)


def _column_bases(matrix: np.ndarray, r: int, tol: Tolerance) -> np.ndarray:
    n = matrix.shape[1]
    combos = np.array(list(itertools.combinations(range(n), r)), dtype=int).reshape(-1, r)
    if tol.exact:
        q = to_rational(matrix)
        keep = [q.extract(list(range(q.rows)), list(c)).rank() == r for c in combos]
        return combos[np.array(keep, dtype=bool)]
    keep = [numeric_rank(matrix[:, c], tol) == r for c in combos]
    return combos[np.array(keep, dtype=bool)]


def optimal_two_stage(matrix, costs, psibar: int, tol: Optional[Tolerance] = None,
                      max_dim: int = 12) -> TwoStagePlan:
    """Cheapest two-stage plan by exhaustive search.

    Searches all ``(psibar+1)``-row subsets and all column bases. Intended as a
    reference for small instances; it reads the full matrix directly.

    Raises
    ------
    ValueError
        If ``m`` or ``n`` exceeds ``max_dim``.
    """
    a = np.asarray(matrix, dtype=float)
    c = np.asarray(costs, dtype=float)
    m, n = a.shape
    if m > max_dim or n > max_dim:
        raise ValueError(f"instance {m}x{n} too large for exhaustive search (limit {max_dim})")
    tol = Tolerance.for_matrix(a) if tol is None else tol
    r = numeric_rank(a, tol)
    d = psibar + 1
    if d > m:
        raise ValueError("psibar + 1 exceeds the number of rows")
    bases = _column_bases(a, r, tol)
    best = None
    for rows in itertools.combinations(range(m), d):
        rows = list(rows)
        outside = np.setdiff1d(np.arange(m), rows)
        residual = c[outside].sum(axis=0)
        totals = c[rows].sum() + residual[bases].sum(axis=1)
        k = int(np.argmin(totals))
        if best is None or totals[k] < best.cost - 1e-12:
            best = TwoStagePlan(tuple(rows), None, tuple(int(v) for v in bases[k]), float(totals[k]))
    return best
