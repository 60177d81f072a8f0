"""Loss-landscape analysis of one-hidden-layer ReLU networks with squared loss."""

from .cells import ActivationPattern, HalfspaceSystem, halfspace_feasible, pattern_from_weights
from .errors import InvalidInputError, NotASaddleError, ParseError
from .kernels import BACKEND
from .linalg_core import general_least_squares, is_solvable, pseudoinverse
from .minima import analyze_cell, solve_cell_minima
from .model import Dataset, NetworkParams, loss_R, loss_zw
from .nondiff import BoundaryConfig, lemma2_check, solve_nondiff
from .probability import GaussianClassModel, ParallelWeightConfig, optimal_locations
from .saddle import saddle_sweep, solve_saddle

__version__ = "0.1.0"
