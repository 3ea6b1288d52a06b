from .algorithms import (algorithm1_search, algorithm2_advancing,
                         encode_state, sensor_neighborhood_counts)
from .library import (CandidateLibrary, LibraryTerm, build_library,
                      true_coefficients)
from .regression import (RegressionProblem, SparseCoefficients, SweepResult,
                         coefficients_csv, default_weight_grid,
                         penalized_objective, score_recovery, sparse_regress,
                         sparsity_sweep, sweep_csv)

__all__ = [name for name in dir() if not name.startswith("_")]
