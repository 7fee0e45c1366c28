"""Completion with noisy observations.

``run_eerei``
    Some columns are pure noise. The probe-and-certify pass runs unchanged
    (noise columns simply look independent and are observed in full), and
    afterwards a column is declared noise when removing it lowers the rank
    of the recovered matrix.
``run_lrebn``
    Every column carries a small perturbation of norm at most ``eps``. The
    detection threshold and the probe size both scale with a running upper
    bound on the angle between the estimated and the true column space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import combinatorics
from .algorithms import CompletionResult, _finish, _random_rows, erei_core
from .linalg import (Tolerance, empty_basis, numeric_rank, reconstruct_column, restricted_residual,
                     to_rational)
from .oracle import ObservationOracle

# Probe-size constant for desk-scale runs. With the constant 72 the probe
# size exceeds m for every m below a few thousand and the method observes
# everything; 0.25 keeps d well below m at m = 100.
DESK_BASE_CONST = 0.25


def rank_decrement_columns(matrix, tol: Tolerance = Tolerance()) -> frozenset:
    """Columns whose removal lowers the rank.

    Column ``j`` qualifies exactly when ``e_j`` lies in the row space, i.e.
    its leverage score is one. Leverage is used to shortlist candidates
    (score above one half) and each candidate is confirmed by recomputing
    the rank without it.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = a.shape[1]
    if a.size == 0:
        return frozenset()
    if tol.exact:
        q = to_rational(a)
        rank = q.rank()
        return frozenset(j for j in range(n)
                         if q.extract(list(range(q.rows)), [c for c in range(n) if c != j]).rank() < rank)
    rank = numeric_rank(a, tol)
    if rank == 0:
        return frozenset()
    _, _, vt = np.linalg.svd(a, full_matrices=False)
    lev = np.sum(vt[:rank] ** 2, axis=0)
    out = set()
    for j in np.flatnonzero(lev > 0.5):
        if numeric_rank(np.delete(a, j, axis=1), tol) < rank:
            out.add(int(j))
    return frozenset(out)


def angle_cap(k: int, eps: float) -> float:
    """Worst-case angle ``(3 pi / 2) sqrt(k eps)`` after ``k`` noisy basis vectors."""
    if k < 0 or eps < 0:
        raise ValueError("k and eps must be non-negative")
    return 1.5 * math.pi * math.sqrt(k * eps)


def noisy_coherence_bound(mu_k: float, m: int, k: int, theta: float) -> float:
    """Coherence ceiling ``2 mu_k + 2 (m/k) theta^2`` of a space within angle ``theta`` of one with coherence ``mu_k``."""
    if k <= 0:
        raise ValueError("k must be positive")
    if mu_k < 0 or theta < 0:
        raise ValueError("inputs must be non-negative")
    return 2.0 * mu_k + 2.0 * (m / k) * theta ** 2


class AngleTracker:
    """Running upper bound on the angle between the estimated and true column spaces.

    Each new basis vector updates the bound by
    ``theta_k = (pi/2) a / (s - theta_{k-1}) + theta_{k-1}`` where ``a`` is the
    angle a single noisy column can make with its clean version,
    ``arcsin(min(1, eps))``, and ``s`` is the angle between the new column and
    the previous estimate. A non-positive denominator, or a value above the
    worst case ``angle_cap(k, eps)``, yields the cap.
    """

    def __init__(self, eps: float):
        self.eps = float(eps)
        self.k = 0
        self.theta = 0.0
        self.history: List[float] = []

    @property
    def cap(self) -> float:
        return angle_cap(self.k, self.eps)

    def update(self, separation: float) -> float:
        self.k += 1
        cap = self.cap
        num = math.asin(min(1.0, self.eps))
        den = separation - self.theta
        new = cap if den <= 0 else 0.5 * math.pi * num / den + self.theta
        self.theta = min(max(new, self.theta), cap)
        self.history.append(self.theta)
        return self.theta


@dataclass
class LrebnParams:
    """Inputs of the bounded-noise estimator.

    ``base_const`` and ``angle_const`` are the constants 72 and 8 of the
    probe-size rule; smaller values give usable probe sizes at small ``m``.
    ``adaptive=False`` uses the worst-case angle instead of the tracked one
    when enlarging the probe size.
    """

    mu: float
    r: int
    eps: float
    delta: float
    adaptive: bool = True
    base_const: float = 72.0
    angle_const: float = 8.0
    tol: Tolerance = Tolerance()

    def __post_init__(self):
        if not 0 <= self.eps < 0.25:
            raise ValueError("eps must lie in [0, 1/4)")
        if not 0 < self.delta <= 0.1:
            raise ValueError("delta must lie in (0, 0.1]")
        if self.r < 1:
            raise ValueError("r must be positive")


def run_lrebn(oracle: ObservationOracle, params: LrebnParams) -> CompletionResult:
    """Low-rank estimate of a matrix with unit-norm columns plus bounded noise.

    A column is observed in full when its residual on the probe rows exceeds
    ``(1+eps)(sqrt(3d/2m) theta + sqrt(3 d k eps / 2m))``; the tracked angle
    ``theta`` is then updated and the probe size becomes
    ``72 mu r ln^2(1/delta) + 8 m theta^2 ln(r/delta)`` (clamped to ``m``).
    Other columns are back-projected from their probe rows. Probe rows are
    redrawn for every column.

    ``details`` records, per column, the probe size used, the basis dimension
    at that time and whether it was observed in full.
    """
    m, n = oracle.shape
    p = params
    tol = p.tol
    rng = oracle.rng
    tracker = AngleTracker(p.eps)

    def probe_size(k):
        theta = tracker.theta if p.adaptive else angle_cap(k, p.eps)
        return combinatorics.lrebn_d(p.mu, p.r, p.delta, theta, m, p.base_const, p.angle_const)

    d = probe_size(0)
    basis = empty_basis(m)
    rec = np.zeros((m, n))
    used_d, dims, full = [], [], []
    oracle.set_phase("columns")
    omega = _random_rows(rng, np.arange(m), d)
    for t in range(n):
        x = oracle.observe_entries(omega, t)
        res = restricted_residual(basis, omega, x, tol)
        k = basis.k
        thr = (1 + p.eps) * (math.sqrt(1.5 * d / m) * tracker.theta + math.sqrt(1.5 * d * k * p.eps / m))
        floor = tol.cutoff(np.linalg.norm(x), m)
        used_d.append(len(omega))
        if res > max(thr, floor) and k < m:
            col = oracle.observe_column(t)
            sep = math.asin(min(1.0, math.sqrt(2.0 * m / (3.0 * len(omega))) * res / np.linalg.norm(col)))
            grown = basis.extended(col, tol)
            if grown.k > k:
                basis = grown
                tracker.update(sep)
                d = probe_size(basis.k)
            rec[:, t] = col
            full.append(t)
        else:
            rec[:, t] = reconstruct_column(basis, omega, x, tol, allow_deficient=True)
        dims.append(basis.k)
        if t + 1 < n:
            omega = _random_rows(rng, np.arange(m), d)
    return _finish(oracle, rec, basis.k, phases=1,
                   details={"d": used_d, "k": dims, "full_columns": full, "theta": list(tracker.history),
                            "adaptive": p.adaptive})


@dataclass
class EereiParams:
    r: int
    psi_u: float
    psi_v: float
    xi: int
    eps: float
    tol: Tolerance = Tolerance()
    d: Optional[int] = None

    def __post_init__(self):
        if self.xi < 0:
            raise ValueError("xi must be non-negative")


def run_eerei(oracle: ObservationOracle, params: EereiParams) -> Tuple[frozenset, CompletionResult]:
    """Recovery when up to ``xi`` columns are pure noise.

    Returns the detected noise columns and the result. Only the columns
    outside the detected set are meaningful in ``result.recovered``.
    """
    if params.psi_u < 1 or params.psi_v < 1:
        raise ValueError("psi_u and psi_v must be at least 1")
    m, n = oracle.shape
    d = params.d if params.d is not None else combinatorics.eerei_d(
        m, params.r, params.psi_u, params.psi_v, params.eps, params.xi)
    rec, basis, R, full, fallbacks = erei_core(oracle, d, params.tol)
    sigma = rank_decrement_columns(rec, params.tol)
    b = combinatorics.eerei_bound(m, n, params.r, params.psi_u, params.psi_v, params.eps, params.xi)
    res = _finish(oracle, rec, basis.k - len(sigma), phases=1, bound=b.value,
                  failure_probability=b.failure_probability,
                  details={"d": d, "rows": list(R), "full_columns": full, "noisy": sorted(sigma),
                           "clean": [j for j in range(n) if j not in sigma], "fallbacks": fallbacks})
    return sigma, res


def lrebn_error_ratios(result: CompletionResult, clean, eps: float) -> np.ndarray:
    """Per-column error divided by ``(m/d) sqrt(k eps)``.

    ``d`` is the probe size used for the column and ``k`` the basis
    dimension after it was processed (at least one). Returns zeros when
    ``eps`` is zero.
    """
    clean = np.asarray(clean, dtype=float)
    m = clean.shape[0]
    err = np.linalg.norm(result.recovered - clean, axis=0)
    if eps == 0:
        return np.zeros_like(err)
    d = np.asarray(result.details["d"], dtype=float)
    k = np.maximum(np.asarray(result.details["k"], dtype=float), 1.0)
    return err / ((m / d) * np.sqrt(k * eps))
