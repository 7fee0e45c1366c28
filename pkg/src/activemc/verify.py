"""Randomized property suites that back the ``verify`` command.

Each suite returns a JSON-ready dict with one boolean per property under
``"properties"`` and an overall ``"passed"``.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Dict

import numpy as np

from . import combinatorics
from .generators import gen_coherent_lowrank, make_column_space_coherent, named_fixture
from .hetcost import optimal_two_stage, run_erhc
from .linalg import Tolerance, numeric_rank
from .oracle import CostModel, ObservationOracle
from .sparsity import (coherence, restricted_dependence, sparsity_number, subspace_profile,
                       validate_profile)


def _sparse_integer_basis(rng, m, r, density=0.5, lo=-2, hi=2):
    """Random integer ``m x r`` matrix of full column rank with many zeros."""
    while True:
        b = rng.integers(lo, hi + 1, size=(m, r)) * (rng.random((m, r)) < density)
        if numeric_rank(b, Tolerance(exact=True)) == r:
            return b.astype(float)


def _verdict(name, props, **info):
    out = {"suite": name, "properties": props}
    out.update(info)
    out["passed"] = all(props.values())
    return out


def restricted_dependence_suite(instances: int = 1000, seed=0) -> dict:
    """Restricted versus full dependence on random sparse subspaces.

    For each instance a sparse integer subspace ``U`` is drawn, its sparsity
    number is computed exactly, and a set of vectors of ``U`` (dependent in
    about a third of the cases) is tested on a random row set of size above
    the sparsity number. The two verdicts must agree. The suite also checks
    the tightness witness: on the tightness fixture, the first and third
    columns look dependent on the last three rows but are independent.
    """
    rng = np.random.default_rng(seed)
    tol = Tolerance(exact=True)
    disagreements = nontrivial = dependent = 0
    for _ in range(instances):
        m = int(rng.integers(3, 9))
        r = int(rng.integers(1, min(4, m - 1) + 1))
        b = _sparse_integer_basis(rng, m, r)
        psibar = sparsity_number(b, tol=tol)
        nontrivial += psibar > r - 1
        k = int(rng.integers(1, r + 2))
        coef = rng.integers(-3, 4, size=(r, k)).astype(float)
        if k >= 2 and rng.random() < 0.35:
            coef[:, -1] = coef[:, :-1] @ rng.integers(-2, 3, size=k - 1)
        v = b @ coef
        size = int(rng.integers(psibar + 1, m + 1))
        omega = np.sort(rng.choice(m, size=size, replace=False))
        full = restricted_dependence(v, np.arange(m), tol)
        dependent += full
        disagreements += restricted_dependence(v, omega, tol) != full
    fx = named_fixture("tightness").matrix
    pair = fx[:, [0, 2]]
    psibar_t = sparsity_number(fx, tol=tol)
    witness = (psibar_t == 3 and restricted_dependence(pair, [1, 2, 3], tol)
               and not restricted_dependence(pair, range(4), tol))
    return _verdict("restricted-dependence", {"agreement": disagreements == 0, "witness": bool(witness)},
                    instances=instances, disagreements=int(disagreements), nontrivial=int(nontrivial),
                    dependent_sets=int(dependent))


def first_one(trials: int = 100_000, seed=0, pairs=((20, 3), (50, 5)), rel_tol: float = 0.01) -> dict:
    """Monte Carlo first-one position against ``(m+1)/(k+1)`` and the tail formula.

    Tail frequencies must lie within three binomial standard errors.
    """
    props, info = {}, {}
    ss = np.random.SeedSequence(seed)
    for (m, k), child in zip(pairs, ss.spawn(len(pairs))):
        st = combinatorics.monte_carlo_detection(m, k, trials, child)
        expect = float(combinatorics.expected_first_one_position(m, k))
        props[f"mean_{m}_{k}"] = abs(st.mean - expect) <= rel_tol * expect
        worst = 0.0
        for a, freq in st.tail.items():
            p = float(combinatorics.first_one_tail(m, k, a))
            sd = math.sqrt(max(p * (1 - p), 1e-300) / trials)
            worst = max(worst, abs(freq - p) / sd)
        props[f"tail_{m}_{k}"] = worst <= 3.0
        info[f"{m}_{k}"] = {"mean": st.mean, "expected": expect, "max_tail_z": worst}
    return _verdict("first-one", props, trials=trials, detail=info)


def _random_low_rank_integer(rng, m, n, r):
    while True:
        a = rng.integers(-2, 3, size=(m, r)) @ rng.integers(-2, 3, size=(r, n))
        if numeric_rank(a, Tolerance(exact=True)) == r:
            return a.astype(float)


def two_opt(instances: int = 100, seed=0, max_dim: int = 6) -> dict:
    """Greedy two-stage cost against the exhaustive optimum.

    Random integer instances of size at most ``max_dim x max_dim``; the greedy
    must recover the matrix and cost at most twice the optimum. The worked
    fixtures are checked as well.
    """
    rng = np.random.default_rng(seed)
    tol = Tolerance(exact=True)
    worst = 1.0
    exact_ok = True
    for _ in range(instances):
        m, n = (int(v) for v in rng.integers(2, max_dim + 1, size=2))
        r = int(rng.integers(1, min(m, n) + 1))
        a = _random_low_rank_integer(rng, m, n, r)
        costs = rng.integers(1, 10, size=(m, n)).astype(float)
        psibar = sparsity_number(a, tol=tol)
        res = run_erhc(ObservationOracle(a, cost=CostModel.per_entry(costs)), psibar, tol=tol)
        res.evaluate(a)
        exact_ok &= bool(res.success)
        best = optimal_two_stage(a, costs, psibar, tol)
        worst = max(worst, res.stats.cost / best.cost)
    gap = named_fixture("erhc-greedy-gap")
    g = run_erhc(ObservationOracle(gap.matrix, cost=CostModel.per_entry(gap.costs)), 1, tol=tol).stats.cost
    o = optimal_two_stage(gap.matrix, gap.costs, 1, tol).cost
    eq = named_fixture("erhc-greedy-optimal")
    g2 = run_erhc(ObservationOracle(eq.matrix, cost=CostModel.per_entry(eq.costs)), 1, tol=tol).stats.cost
    o2 = optimal_two_stage(eq.matrix, eq.costs, 1, tol).cost
    props = {"ratio_at_most_2": worst <= 2.0, "recovery_exact": exact_ok,
             "fixture_gap": (g, o) == (32.0, 31.0), "fixture_equal": g2 == o2}
    return _verdict("two-opt", props, instances=instances, max_ratio=worst,
                    fixture_gap={"greedy": g, "optimal": o}, fixture_equal={"greedy": g2, "optimal": o2})


def tau(n_max: int = 10_000, ranks=(1, 2, 3, 4, 5, 8)) -> dict:
    """Ratio identities of both forms of ``tau`` for ``N <= n_max``, the symbolic ratio and the total mass."""
    import sympy as sp
    props = {f"pmf_ratio_r{r}": combinatorics.check_tau_ratio_identity(r, n_max, "pmf") for r in ranks}
    props.update({f"displayed_ratio_r{r}": combinatorics.check_tau_ratio_identity(r, n_max, "displayed")
                  for r in ranks})
    expr, (N, r, p) = combinatorics.symbolic_tau_ratio("pmf")
    props["symbolic_pmf"] = sp.simplify(expr - N / (N - r + 1) * (1 - p)) == 0
    expr, (N, r, p) = combinatorics.symbolic_tau_ratio("displayed")
    props["symbolic_displayed"] = sp.simplify(expr - N / (N - r) * (1 - p)) == 0
    mass = combinatorics.tau_total_mass(3, 30, 4)
    props["mass"] = abs(mass - 1.0) <= 1e-10
    return _verdict("tau", props, n_max=n_max, mass=mass)


def coherence_inequalities(subspaces: int = 1000, seed=0) -> dict:
    """Structural inequalities on exact profiles of random subspaces, plus the coherent generator."""
    rng = np.random.default_rng(seed)
    tol = Tolerance(exact=True)
    bad = []
    for t in range(subspaces):
        m = int(rng.integers(2, 10))
        r = int(rng.integers(1, m + 1))
        kind = t % 3
        if kind == 0:
            b = _sparse_integer_basis(rng, m, r)
            prof = subspace_profile(b, tol)
        elif kind == 1:
            prof = subspace_profile(rng.standard_normal((m, r)))
        else:
            b = rng.standard_normal((m, r))
            b[:, 0] = 0.0
            b[int(rng.integers(m)), 0] = 1.0
            prof = subspace_profile(b)
        v = validate_profile(prof)
        if v:
            bad.append({"m": m, "r": r, "violations": v})
    worst = 0.0
    for t in range(50):
        m, n, r = 30, 40, int(rng.integers(1, 8))
        a = make_column_space_coherent(gen_coherent_lowrank(m, n, r - 1, seed=int(rng.integers(2**31))), 1,
                                       seed=int(rng.integers(2**31)))
        mu = coherence(a)
        worst = max(worst, abs(mu - m / r) / (m / r))
    props = {"inequalities": not bad, "coherent_generator": worst <= 1e-12}
    return _verdict("coherence", props, subspaces=subspaces, violations=bad[:5], max_relative_gap=worst)


SUITES: Dict[str, Callable[..., dict]] = {
    "restricted-dependence": restricted_dependence_suite,
    "first-one": first_one,
    "two-opt": two_opt,
    "tau": tau,
    "coherence": coherence_inequalities,
}
