"""Row-space coherence and the cost of adaptive sampling.

Two 100 x 300 rank-4 matrices share an incoherent column space. In the
second one a standard basis vector sits in the row space, so one column
carries a direction no other column has. Probing columns cannot predict
where that column is, and the probe size has to grow.
"""
import numpy as np

from activemc import (EreiParams, ErrParams, ObservationOracle, gen_coherent_lowrank, generic_profiles, run_erei,
                      run_err)

m, n, r = 100, 300, 4

#
# Profiles
#

for cr in (0, 1):
    pu, pv = generic_profiles(m, n, r, 0, cr)
    print(f"coherent rows={cr}: psi(U)={pu.psi}  psi(V)={pv.psi}")

#
# Observation counts over a few seeds
#

for cr in (0, 1):
    pu, pv = generic_profiles(m, n, r, 0, cr)
    counts = {"err": [], "erei": []}
    for seed in range(5):
        a = gen_coherent_lowrank(m, n, r, 0, cr, seed)
        res = run_err(ObservationOracle(a, seed=seed), ErrParams(r=r)).evaluate(a)
        counts["err"].append(res.stats.count)
        res = run_erei(ObservationOracle(a, seed=seed),
                       EreiParams(r=r, psi_u=pu.psi, psi_v=pv.psi, eps=0.1)).evaluate(a)
        counts["erei"].append(res.stats.count)
    print(f"coherent rows={cr}: ERR mean {np.mean(counts['err']):.0f}, EREI mean {np.mean(counts['erei']):.0f}"
          f"  (degrees of freedom {(m + n - r) * r})")
