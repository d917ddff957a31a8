"""GMRES with controllably inexact inner products and matrix-vector products.

The Arnoldi process uses modified Gram-Schmidt; each inner product and each
product with ``A`` can be perturbed by a prescribed amount (perturbation
mode) or evaluated in emulated binary16/binary32 arithmetic chosen per
iteration (multiprecision mode).  Diagnostics measure the resulting loss of
orthogonality and residual gap.
"""
__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, load_config
from .inexact import BINARY16, BINARY32, BINARY64, round_to
from .linalg import grcar, matrix_norm2, sine_rhs
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .solver import gmres_solve, reference_exact_solve

__all__ = ["BINARY16", "BINARY32", "BINARY64", "ConfigError", "ExperimentConfig",
           "MatrixMarketError", "gmres_solve", "grcar", "load_config",
           "matrix_norm2", "read_matrix_market", "reference_exact_solve",
           "round_to", "sine_rhs", "write_matrix_market"]
