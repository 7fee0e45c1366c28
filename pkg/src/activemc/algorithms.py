"""Adaptive exact completion of low-rank matrices.

Every routine takes an :class:`~activemc.oracle.ObservationOracle`, reads
entries only through it, and returns a :class:`CompletionResult`. Columns are
handled one at a time: a column that looks independent of the current basis
on a few probe rows is observed in full and added to the basis; any other
column is rebuilt from its probe rows by back-projection.

``run_ercs``
    Fixed probe rows observed in full up front. Exact whenever the probe set
    has more rows than the column space's sparsity number.
``run_ks2013``
    The baseline with a random probe set of a given size.
``run_err`` / ``run_erre``
    One random probe per column per sweep, with a nonsingularity test on the
    growing row/column cross. ``run_err`` stops at the known rank,
    ``run_erre`` after ``T`` sweeps without progress.
``run_erei``
    Fresh random probes per column plus the rows already certified.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import combinatorics
from .linalg import (OrthonormalBasis, Tolerance, empty_basis, is_nonsingular, numeric_rank,
                     reconstruct_column, residual_detects)
from .oracle import ColumnExhausted, ObservationOracle, OracleStats


@dataclass
class CompletionResult:
    """Output of a completion run.

    ``success`` and ``max_abs_error`` stay ``None`` until a harness calls
    :meth:`evaluate` with the ground truth. ``failed`` is the algorithm's own
    failure signal (for example, running out of entries before reaching the
    requested rank).
    """

    recovered: np.ndarray
    rank_estimate: int
    stats: OracleStats
    seed: Any = None
    phases: int = 0
    bound: Optional[float] = None
    bound_ok: Optional[bool] = None
    failure_probability: Optional[float] = None
    success: Optional[bool] = None
    max_abs_error: Optional[float] = None
    failed: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    def evaluate(self, truth, atol: float = 1e-8, columns=None) -> "CompletionResult":
        """Compare with the ground truth (optionally on a subset of columns) and set ``success``."""
        truth = np.asarray(truth, dtype=float)
        cols = slice(None) if columns is None else np.asarray(sorted(columns), dtype=int)
        diff = np.abs(self.recovered[:, cols] - truth[:, cols])
        self.max_abs_error = float(diff.max()) if diff.size else 0.0
        scale = max(1.0, float(np.abs(truth).max()) if truth.size else 1.0)
        self.success = bool(self.max_abs_error <= atol * scale)
        return self

    def summary(self) -> dict:
        return {"observations": self.stats.count, "cost": self.stats.cost, "rank_estimate": self.rank_estimate,
                "phases": self.phases, "bound": self.bound, "bound_ok": self.bound_ok,
                "failure_probability": self.failure_probability, "success": self.success,
                "max_abs_error": self.max_abs_error, "failed": self.failed}


def _finish(oracle: ObservationOracle, recovered, rank, **kw) -> CompletionResult:
    res = CompletionResult(recovered=recovered, rank_estimate=int(rank), stats=oracle.stats,
                           seed=oracle.seed, **kw)
    if res.bound is not None:
        res.bound_ok = bool(res.stats.count <= res.bound)
    return res


def _random_rows(rng, pool, size) -> List[int]:
    pool = np.asarray(pool, dtype=int)
    size = min(int(size), pool.size)
    return sorted(int(v) for v in rng.choice(pool, size=size, replace=False))


def _basis_for(oracle, tol: Tolerance) -> OrthonormalBasis:
    return empty_basis(oracle.m, exact=tol.exact)


# ---------------------------------------------------------------------------
# fixed probe rows: KS2013 and ERCS


@dataclass
class Ks2013Params:
    d: int
    omega: Optional[Sequence[int]] = None
    tol: Tolerance = Tolerance()


@dataclass
class ErcsParams:
    d: int
    omega: Optional[Sequence[int]] = None
    tol: Tolerance = Tolerance()
    profile: Any = None  # column-space SubspaceProfile, checked when given


def _probe_rows(oracle, d, omega):
    m = oracle.m
    if d > m or d < 0:
        raise ValueError(f"probe size d={d} must be in [0, m={m}]")
    if omega is not None:
        omega = sorted(int(i) for i in omega)
        if len(set(omega)) != len(omega) or any(not 0 <= i < m for i in omega):
            raise ValueError("probe rows must be distinct and in range")
        return omega
    return _random_rows(oracle.rng, np.arange(m), d)


def _column_pass(oracle, omega, tol, order=None):
    """Shared loop of the fixed-probe algorithms."""
    m, n = oracle.shape
    basis = _basis_for(oracle, tol)
    rec = np.zeros((m, n))
    full = []
    for j in (range(n) if order is None else order):
        x = oracle.observe_entries(omega, j)
        if residual_detects(basis, omega, x, tol):
            col = oracle.observe_column(j)
            basis = basis.extended(col, tol)
            rec[:, j] = col
            full.append(int(j))
        else:
            rec[:, j] = reconstruct_column(basis, omega, x, tol, allow_deficient=True)
    return rec, basis, full


def run_ks2013(oracle: ObservationOracle, params: Ks2013Params) -> CompletionResult:
    """Baseline: one random probe set of size ``d``, shared by all columns.

    Each column is probed on the ``d`` rows; a nonzero residual against the
    current basis triggers a full observation, otherwise the column is
    back-projected with the pseudo-inverse of the restricted basis.
    """
    omega = _probe_rows(oracle, params.d, params.omega)
    oracle.set_phase("columns")
    rec, basis, full = _column_pass(oracle, omega, params.tol)
    return _finish(oracle, rec, basis.k, phases=1, details={"omega": omega, "full_columns": full})


def run_ercs(oracle: ObservationOracle, params: ErcsParams) -> CompletionResult:
    """Exact recovery from ``d`` fully observed rows plus a column basis.

    With ``d`` larger than the column-space sparsity number, every restricted
    dependence is a true dependence, so the result is exact and uses
    ``m r + (n - r) d`` observations.

    Raises
    ------
    ValueError
        If ``d > m``, or if a ``profile`` is supplied and ``d <= profile.psibar``.
    """
    if params.profile is not None and params.d < params.profile.psibar + 1:
        raise ValueError(f"d={params.d} is below psibar+1={params.profile.psibar + 1}")
    omega = _probe_rows(oracle, params.d, params.omega)
    oracle.set_phase("rows")
    oracle.observe_block(omega, np.arange(oracle.n))
    oracle.set_phase("columns")
    rec, basis, full = _column_pass(oracle, omega, params.tol)
    return _finish(oracle, rec, basis.k, phases=1, details={"omega": omega, "full_columns": full})


# ---------------------------------------------------------------------------
# one probe per column per sweep: ERR and ERRE


@dataclass
class ErrParams:
    r: int
    eps: Optional[float] = None
    psi_u: Optional[float] = None
    psi_v: Optional[float] = None
    tol: Tolerance = Tolerance()
    trace: bool = False


@dataclass
class ErreParams:
    T: int
    eps: Optional[float] = None
    psi_u: Optional[float] = None
    psi_v: Optional[float] = None
    r: Optional[int] = None  # true rank, only used for bound reporting
    tol: Tolerance = Tolerance()
    trace: bool = False


def _sweep(oracle, R, C, basis, tol, phase, stop_at=None, trace=None):
    """One sweep over the columns. Returns (basis, detections, draws)."""
    detections = draws = 0
    for j in range(oracle.n):
        if stop_at is not None and len(C) >= stop_at:
            break
        try:
            i = oracle.draw_unobserved_uniform(j)
        except ColumnExhausted:
            continue
        draws += 1
        oracle.observe(i, j)
        cross = oracle.known.block(R + [i], C + [j])
        hit = is_nonsingular(cross, tol)
        if trace is not None:
            trace.append({"phase": phase, "column": j, "row": i, "basis": tuple(C), "detected": hit})
        if hit:
            col = oracle.observe_column(j)
            oracle.observe_row(i)
            R.append(i)
            C.append(j)
            basis = basis.extended(col, tol)
            detections += 1
    return basis, detections, draws


def _rebuild_from_rows(oracle, basis, R, C, tol):
    m, n = oracle.shape
    rec = np.zeros((m, n))
    for j in range(n):
        if oracle.is_column_full(j):
            rec[:, j] = oracle.known.column(j)
        elif basis.k:
            rec[:, j] = reconstruct_column(basis, R, oracle.known.column(j, R), tol)
    return rec


def run_err(oracle: ObservationOracle, params: ErrParams) -> CompletionResult:
    """Recovery with known rank ``r``.

    Sweeps over the columns drawing one hidden entry per column. When the
    cross ``M[R + i, C + j]`` is nonsingular, column ``j`` and row ``i`` are
    observed in full and join ``C`` and ``R``. The run stops as soon as ``r``
    pairs are found; the remaining columns are rebuilt from the rows ``R``.

    If every entry gets observed before ``r`` pairs are found (the requested
    rank exceeds the true rank), the run ends with ``failed=True``.
    """
    m, n = oracle.shape
    tol = params.tol
    if params.r == 0:
        return _finish(oracle, np.zeros((m, n)), 0)
    R: List[int] = []
    C: List[int] = []
    basis = _basis_for(oracle, tol)
    trace = [] if params.trace else None
    phases = 0
    failed = False
    while len(C) < params.r:
        phases += 1
        oracle.set_phase(f"phase-{phases}")
        basis, _, draws = _sweep(oracle, R, C, basis, tol, phases, stop_at=params.r, trace=trace)
        if draws == 0:
            failed = True
            break
    oracle.set_phase("rebuild")
    rec = _rebuild_from_rows(oracle, basis, R, C, tol)
    bound = fail = None
    if None not in (params.eps, params.psi_u, params.psi_v):
        b = combinatorics.err_bound(m, n, params.r, params.psi_u, params.psi_v, params.eps)
        bound, fail = b.value, b.failure_probability
    details = {"rows": list(R), "columns": list(C)}
    if trace is not None:
        details["trace"] = trace
    return _finish(oracle, rec, len(C), phases=phases, bound=bound, failure_probability=fail,
                   failed=failed, details=details)


def run_erre(oracle: ObservationOracle, params: ErreParams) -> CompletionResult:
    """Recovery with unknown rank: sweep until ``T`` consecutive sweeps find nothing new.

    Returns the rank estimate in ``rank_estimate``. A bound is reported only
    when ``r``, ``eps``, ``psi_u`` and ``psi_v`` are all supplied.
    """
    if params.T < 1:
        raise ValueError("T must be at least 1")
    m, n = oracle.shape
    tol = params.tol
    R: List[int] = []
    C: List[int] = []
    basis = _basis_for(oracle, tol)
    trace = [] if params.trace else None
    phases = delay = 0
    while delay < params.T:
        delay += 1
        phases += 1
        oracle.set_phase(f"phase-{phases}")
        basis, found, draws = _sweep(oracle, R, C, basis, tol, phases, trace=trace)
        if found:
            delay = 0
        if draws == 0:
            break
    oracle.set_phase("rebuild")
    rec = _rebuild_from_rows(oracle, basis, R, C, tol)
    bound = fail = None
    if None not in (params.r, params.eps, params.psi_u, params.psi_v):
        b = combinatorics.erre_bound(m, n, params.r, params.psi_u, params.psi_v, params.eps, params.T)
        bound, fail = b.value, b.failure_probability
    details = {"rows": list(R), "columns": list(C)}
    if trace is not None:
        details["trace"] = trace
    return _finish(oracle, rec, len(C), phases=phases, bound=bound, failure_probability=fail,
                   details=details)


# ---------------------------------------------------------------------------
# fresh probes plus certified rows: EREI


@dataclass
class EreiParams:
    r: int
    psi_u: float
    psi_v: float
    eps: float
    tol: Tolerance = Tolerance()
    d: Optional[int] = None  # overrides the formula when given
    deltas: Optional[Sequence[Sequence[int]]] = None  # fixed probe rows per column, for replaying a trace


def _extension_row(basis, R, candidates, tol, rng, m):
    """A row ``a`` with ``basis[R + a]`` of full rank, preferring the best conditioned candidate."""
    def rank_ok(a):
        if tol.exact and basis.exact:
            return basis.span.extract(R + [a], list(range(basis.k))).rank() == basis.k
        return numeric_rank(basis.vectors[R + [a]], tol) == basis.k

    def smin(a):
        return np.linalg.svd(basis.vectors[R + [a]], compute_uv=False)[-1]

    for a in sorted(candidates, key=lambda a: (-smin(a), a)):
        if rank_ok(a):
            return a, False
    rest = [i for i in range(m) if i not in set(R) and i not in set(candidates)]
    for a in rng.permutation(rest):
        if rank_ok(int(a)):
            return int(a), True
    raise RuntimeError("no row extends the restricted basis; the basis is not full rank")


def erei_core(oracle: ObservationOracle, d: int, tol: Tolerance, deltas=None):
    """Column pass shared by EREI and its noise-tolerant extension.

    Returns ``(recovered, basis, R, full_columns, fallbacks)``.
    """
    m, n = oracle.shape
    rng = oracle.rng
    basis = _basis_for(oracle, tol)
    R: List[int] = []
    full: List[int] = []
    fallbacks = 0

    def draw(i):
        if deltas is not None:
            delta = sorted(int(v) for v in deltas[i])
        else:
            delta = _random_rows(rng, np.setdiff1d(np.arange(m), R), min(d, m - len(R)))
        return sorted(set(delta) | set(R))

    oracle.set_phase("columns")
    omega = draw(0)
    for i in range(n):
        x = oracle.observe_entries(omega, i)
        if residual_detects(basis, omega, x, tol):
            col = oracle.observe_column(i)
            grown = basis.extended(col, tol)
            full.append(i)
            if grown.k > basis.k:
                basis = grown
                a, fb = _extension_row(basis, R, [a for a in omega if a not in R], tol, rng, m)
                fallbacks += fb
                R.append(a)
        if i + 1 < n:
            omega = draw(i + 1)
    oracle.set_phase("rows")
    if R:
        oracle.observe_block(R, np.arange(n))
    rec = np.zeros((m, n))
    for i in range(n):
        if oracle.is_column_full(i):
            rec[:, i] = oracle.known.column(i)
        elif basis.k:
            rec[:, i] = reconstruct_column(basis, R, oracle.known.column(i, R), tol)
    return rec, basis, R, full, fallbacks


def run_erei(oracle: ObservationOracle, params: EreiParams) -> CompletionResult:
    """Recovery from estimates of the rank and of both nonsparsity numbers.

    Each column is probed on ``d`` fresh random rows together with the
    certified rows ``R``. A detected column is observed in full, and one of
    its probe rows that keeps ``basis[R]`` nonsingular joins ``R``. At the
    end the rows ``R`` are observed in full and all other columns are
    rebuilt from them.
    """
    if params.psi_u < 1 or params.psi_v < 1:
        raise ValueError("psi_u and psi_v must be at least 1")
    m, n = oracle.shape
    d = params.d if params.d is not None else combinatorics.erei_d(m, params.r, params.psi_u,
                                                                   params.psi_v, params.eps)
    rec, basis, R, full, fallbacks = erei_core(oracle, d, params.tol, params.deltas)
    b = combinatorics.err_bound(m, n, params.r, params.psi_u, params.psi_v, params.eps)
    return _finish(oracle, rec, basis.k, phases=1, bound=b.value, failure_probability=b.failure_probability,
                   details={"d": d, "rows": list(R), "full_columns": full, "fallbacks": fallbacks})


def psi_estimates_from_coherence(mu0, m, r):
    """Nonsparsity estimates usable when only the column coherence is known: ``(ceil(m/(mu0 r)), 1)``."""
    return combinatorics.psi_from_coherence(mu0, m, r), 1
