"""Closed forms and Monte Carlo checks behind the sampling analysis.

Two probabilistic facts drive the observation counts:

* sampling rows of a column without replacement, the first row that lands
  on one of ``k`` marked rows out of ``m`` sits on average at position
  ``(m+1)/(k+1)``;
* the number of trials until the ``r``-th success with success probability
  ``k/m`` is negative binomial.

Exact values use :class:`fractions.Fraction`; floats appear only at reporting
time. All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional

import numpy as np


def expected_first_one_position(m: int, k: int) -> Fraction:
    """Mean position of the first one in a uniformly random binary string of length ``m`` with ``k`` ones."""
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    return Fraction(m + 1, k + 1)


def first_one_tail(m: int, k: int, a: int) -> Fraction:
    """``P(first one > a)``: the first ``a`` slots are all zero. Zero when ``a > m - k``."""
    if a < 0:
        raise ValueError("a must be non-negative")
    if a > m - k:
        return Fraction(0)
    return Fraction(math.comb(m - a, k), math.comb(m, k))


def tau_pmf_exact(k: int, m: int, r: int, N: int) -> Fraction:
    """Probability that the ``r``-th success happens at trial ``N`` with success rate ``k/m``.

    ``C(N-1, r-1) p^r (1-p)^(N-r)`` with ``p = k/m``.
    """
    if not (1 <= k <= m and r >= 1):
        raise ValueError("need 1 <= k <= m and r >= 1")
    if N < r:
        return Fraction(0)
    p = Fraction(k, m)
    return math.comb(N - 1, r - 1) * p ** r * (1 - p) ** (N - r)


def tau_pmf(k: int, m: int, r: int, N: int) -> float:
    """Floating point version of :func:`tau_pmf_exact`, evaluated in log space."""
    if not (1 <= k <= m and r >= 1):
        raise ValueError("need 1 <= k <= m and r >= 1")
    if N < r:
        return 0.0
    p = k / m
    if p == 1.0:
        return 1.0 if N == r else 0.0
    logv = (math.lgamma(N) - math.lgamma(r) - math.lgamma(N - r + 1)
            + r * math.log(p) + (N - r) * math.log1p(-p))
    return math.exp(logv)


def tau_displayed_form(k: int, m: int, r: int, N: int) -> Fraction:
    """``C(N-1, r) p^r (1-p)^(N-r-1)``, the unnormalized variant with the shifted binomial index.

    It equals ``tau_pmf_exact(k, m, r + 1, N) / p`` and satisfies the ratio
    identity ``f(N+1)/f(N) = N/(N-r) (1-p)``.
    """
    if N < r + 1:
        return Fraction(0)
    p = Fraction(k, m)
    return math.comb(N - 1, r) * p ** r * (1 - p) ** (N - r - 1)


def tau_ratio(k: int, m: int, r: int, N: int) -> Fraction:
    """``tau(N+1) / tau(N)`` for the normalized pmf: ``N/(N-r+1) (1 - k/m)``."""
    return Fraction(N, N - r + 1) * (1 - Fraction(k, m))


def check_tau_ratio_identity(r: int, n_max: int, form: str = "pmf") -> bool:
    """Verify the consecutive-ratio identity exactly for every ``r <= N <= n_max``.

    After cancelling the common power terms, the identity reduces to an
    integer identity between binomial coefficients, which is checked for
    each ``N``:

    * ``form="pmf"``: ``C(N, r-1) (N-r+1) == C(N-1, r-1) N``
    * ``form="displayed"``: ``C(N, r) (N-r) == C(N-1, r) N``
    """
    for N in range(max(r, 1), n_max + 1):
        if form == "pmf":
            ok = math.comb(N, r - 1) * (N - r + 1) == math.comb(N - 1, r - 1) * N
        elif form == "displayed":
            ok = N == r or math.comb(N, r) * (N - r) == math.comb(N - 1, r) * N
        else:
            raise ValueError(f"unknown form {form!r}")
        if not ok:
            return False
    return True


def symbolic_tau_ratio(form: str = "pmf"):
    """Simplified symbolic ratio ``f(N+1)/f(N)`` as a sympy expression in ``N, r, p``."""
    import sympy as sp
    N, r, p = sp.symbols("N r p", positive=True)
    if form == "pmf":
        f = lambda n: sp.binomial(n - 1, r - 1) * p ** r * (1 - p) ** (n - r)
    else:
        f = lambda n: sp.binomial(n - 1, r) * p ** r * (1 - p) ** (n - r - 1)
    return sp.simplify(sp.combsimp(f(N + 1) / f(N))), (N, r, p)


def tau_total_mass(k: int, m: int, r: int, tail_tol: float = 1e-16) -> float:
    """Sum of the pmf over ``N >= r``, truncated once a geometric tail bound drops below ``tail_tol``."""
    p = k / m
    total = 0.0
    N = r
    while True:
        v = tau_pmf(k, m, r, N)
        total += v
        if N > (2 * m / k + 1) * r:
            rho = 1 - p / 2
            if v * rho / (1 - rho) < tail_tol:
                return total
        N += 1


@dataclass
class FirstOneStats:
    mean: float
    tail: Dict[int, float]
    trials: int
    positions: np.ndarray


def monte_carlo_detection(m: int, k: int, trials: int, seed=None,
                          tail_points: Iterable[int] = (1, 2, 3, 4, 5)) -> FirstOneStats:
    """Simulate the step-by-step switch process for the first marked row.

    At step ``i`` (1-based), a still-running trial stops with probability
    ``k / (m - i + 1)``, the chance that the next row drawn without
    replacement is one of the ``k`` marked rows.
    """
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    rng = np.random.default_rng(seed)
    pos = np.zeros(trials, dtype=np.int64)
    alive = np.ones(trials, dtype=bool)
    for i in range(1, m - k + 2):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        hit = rng.random(idx.size) < k / (m - i + 1)
        pos[idx[hit]] = i
        alive[idx[hit]] = False
    tail = {int(a): float(np.mean(pos > a)) for a in tail_points}
    return FirstOneStats(mean=float(pos.mean()), tail=tail, trials=trials, positions=pos)


def _branches(m, n, r, psi_u, psi_v, eps):
    first = 2.0 * m * n / psi_u * math.log(r / eps)
    second = (2.0 * m / psi_u) * (r + 2 + math.log(1.0 / eps)) / psi_v * n
    return first, second


@dataclass(frozen=True)
class Bound:
    value: float
    first_branch: float
    second_branch: float
    failure_probability: float

    def as_dict(self) -> dict:
        return {"value": self.value, "first_branch": self.first_branch,
                "second_branch": self.second_branch, "failure_probability": self.failure_probability}


def err_bound(m, n, r, psi_u, psi_v, eps) -> Bound:
    """Observation ceiling for rank-known recovery, holding with probability ``1 - eps``.

    ``(m+n-r) r + min(2 m n / psi_u ln(r/eps), (2m/psi_u)(r+2+ln(1/eps)) n / psi_v)``
    """
    first, second = _branches(m, n, r, psi_u, psi_v, eps)
    base = (m + n - r) * r
    return Bound(base + min(first, second), base + first, base + second, float(eps))


def erre_bound(m, n, r, psi_u, psi_v, eps, T) -> Bound:
    """Ceiling for recovery with rank estimation and delay ``T``.

    Adds ``T n`` probes; the failure probability is ``eps + exp(-T psi_u psi_v / m)``.
    """
    b = err_bound(m, n, r, psi_u, psi_v, eps)
    fail = eps + math.exp(-T * psi_u * psi_v / m)
    return Bound(b.value + T * n, b.first_branch + T * n, b.second_branch + T * n, fail)


def erei_d(m, r, psi_u, psi_v, eps) -> int:
    """Per-column probe size ``min(2(m/psi_u) ln(r/eps), (2m/psi_u)(r+2+ln(1/eps))/psi_v)`` rounded up into ``[1, m]``."""
    first = 2.0 * m / psi_u * math.log(r / eps)
    second = (2.0 * m / psi_u) * (r + 2 + math.log(1.0 / eps)) / psi_v
    return int(min(m, max(1, math.ceil(min(first, second)))))


def eerei_d(m, r, psi_u, psi_v, eps, xi) -> int:
    """Probe size when ``xi`` columns may be pure noise.

    With few noisy columns (``xi <= psi_v / 2``) the second branch is doubled;
    otherwise only the first branch is trusted.
    """
    first = 2.0 * m / psi_u * math.log(r / eps)
    if xi <= psi_v / 2:
        second = 4.0 * m / psi_u * (r + 2 + math.log(1.0 / eps)) / psi_v
        val = min(first, second)
    else:
        val = first
    return int(min(m, max(1, math.ceil(val))))


def lrebn_d(mu, r, delta, theta, m: Optional[int] = None, base_const: float = 72.0,
            angle_const: float = 8.0) -> int:
    """Probe size ``72 mu r ln^2(1/delta) + 8 m theta^2 ln(r/delta)``, rounded up and clamped to ``m``.

    The angle term needs ``m``; without it only the first term is used.
    ``base_const`` and ``angle_const`` replace 72 and 8 for scaled-down runs.
    """
    val = base_const * mu * r * math.log(1.0 / delta) ** 2
    if m is not None and theta:
        val += angle_const * m * theta ** 2 * math.log(r / delta)
    d = max(1, math.ceil(val))
    return int(min(d, m)) if m is not None else int(d)


def psi_from_coherence(mu, m, r) -> int:
    """Lower estimate ``ceil(m / (mu r))`` of the column-space nonsparsity from its coherence."""
    return max(1, int(math.ceil(m / (mu * r) - 1e-12)))


def eerei_bound(m, n, r, psi_u, psi_v, eps, xi) -> Bound:
    """Ceiling for recovery with ``xi`` noisy columns: the noise-free ceiling with the
    doubled second branch (or the first branch alone when ``xi > psi_v / 2``), plus ``xi (m + n)``."""
    first = 2.0 * m * n / psi_u * math.log(r / eps)
    second = 4.0 * m / psi_u * (r + 2 + math.log(1.0 / eps)) / psi_v * n
    base = (m + n - r) * r + xi * (m + n)
    val = base + (min(first, second) if xi <= psi_v / 2 else first)
    return Bound(val, base + first, base + second, float(eps))
