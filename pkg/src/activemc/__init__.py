"""Adaptive (active sampling) low-rank matrix completion.

Exact and noise-tolerant completion routines driven by the sparsity number
of the column space, a metered observation oracle, synthetic generators and
the closed forms used to report observation ceilings.
"""
from .algorithms import (CompletionResult, EreiParams, ErcsParams, ErreParams, ErrParams, Ks2013Params,
                         run_erei, run_ercs, run_err, run_erre, run_ks2013)
from .generators import (gen_coherent_lowrank, gen_gaussian_lowrank, generic_profiles, inject_bounded_noise,
                         inject_sparse_noise_columns, named_fixture)
from .hetcost import optimal_two_stage, run_erhc, run_erhc_column_costs
from .linalg import OrthonormalBasis, PartialMatrix, RankDeficientError, Tolerance, UnobservedEntryError
from .noisy import (DESK_BASE_CONST, EereiParams, LrebnParams, lrebn_error_ratios, rank_decrement_columns,
                    run_eerei, run_lrebn)
from .oracle import CostModel, NoiseModel, ObservationOracle
from .sparsity import (SubspaceProfile, coherence, matrix_profiles, sparsity_number, subspace_profile)

__version__ = "0.1.0"
