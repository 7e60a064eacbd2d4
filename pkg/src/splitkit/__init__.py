"""Optimal train/test splitting with support points."""

__version__ = "0.1.0"

from ._accel import USE_NUMBA, backend
from .data import (ColumnSchema, DataError, Dataset, StandardizedMatrix,
                   load_csv, standardize, write_split)
from .encoding import (ContrastMatrix, encode, helmert_coding,
                       mean_abs_correlation, orthogonal_polynomial_coding,
                       separation_distance, sum_coding, treatment_coding,
                       within_rmse)
from .energy import ks_statistic, sp_objective, two_sample_energy
from .nn_index import NNIndex
from .solver import (SolverConfig, SolverReport, ccp_sweep,
                     fit_support_points, init_points)
from .splitter import (FoldAssignment, SplitResult, cadex_split, duplex_split,
                       kfold, random_split, sequential_nn_subsample, split,
                       stratified_split, validation_split)
