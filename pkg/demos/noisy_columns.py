"""Noisy observations.

First a matrix where a few columns are replaced by noise: the noise columns
are found because dropping any one of them lowers the rank. Then every
column is perturbed a little, and the angle-adaptive probe size is compared
with the variant that always assumes the worst angle.
"""
import numpy as np

from activemc import (DESK_BASE_CONST, EereiParams, LrebnParams, NoiseModel, ObservationOracle,
                      gen_gaussian_lowrank, run_eerei, run_lrebn)
from activemc.sparsity import coherence, column_space

#
# Sparse noise columns
#

a = gen_gaussian_lowrank(50, 200, 5, seed=3)
oracle = ObservationOracle(a, noise=NoiseModel.sparse_columns(5, seed=4), seed=5)
clean, _, injected = oracle.harness_view()
found, res = run_eerei(oracle, EereiParams(r=5, psi_u=46, psi_v=196, xi=5, eps=0.1))
res.evaluate(clean, columns=res.details["clean"])
print("injected", sorted(injected))
print("found   ", sorted(found))
print(f"clean columns exact: {res.success}, observations {res.stats.count} of {a.size}")

#
# Bounded noise
#

eps = 0.01
for adaptive in (True, False):
    total, dims = 0, []
    for seed in range(10):
        a = gen_gaussian_lowrank(100, 300, 3, seed)
        oracle = ObservationOracle(a, noise=NoiseModel.bounded(eps, seed=seed + 1000), seed=seed)
        clean, _, _ = oracle.harness_view()
        res = run_lrebn(oracle, LrebnParams(mu=coherence(column_space(clean)), r=3, eps=eps, delta=0.05,
                                            adaptive=adaptive, base_const=DESK_BASE_CONST))
        total += res.stats.count
        dims.append(res.rank_estimate)
    label = "adaptive" if adaptive else "always-increase"
    print(f"{label:>16}: {total} observations, dimensions {sorted(set(dims))}")
