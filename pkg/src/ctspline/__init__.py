"""Control-theoretic smoothing splines.

A curve is fitted as the output of a linear system ``x' = A x + b u``,
``y = c' x`` driven by a control that is a weighted sum of shifted impulse
responses. Coefficients come from a closed-form quadratic problem or from
sparse l1-regularized problems with an l1 or squared data term.
"""
from .data_io import DataSet, make_dataset, read_dataset, synth_paper_dataset, write_dataset
from .errors import SplineError
from .gramian import GramOperator, build_operator, gram_matrix, h_matrix
from .lti_model import StateSpace, make_state_space, matrix_exponential, benchmark_system
from .solver_l1 import L1Config, SolverReport, solve_l1, solve_l1_p1, solve_l1_p2, solve_with_initial_state
from .solver_l2 import L2Config, solve_l2
from .spline_eval import SplineFit, control_signal, fit_error, fit_l1, fit_l2, output_curve, sparsity_report

__version__ = "0.1.0"

__all__ = [
    "DataSet",
    "GramOperator",
    "L1Config",
    "L2Config",
    "SolverReport",
    "SplineError",
    "SplineFit",
    "StateSpace",
    "build_operator",
    "control_signal",
    "fit_error",
    "fit_l1",
    "fit_l2",
    "gram_matrix",
    "h_matrix",
    "make_dataset",
    "make_state_space",
    "matrix_exponential",
    "output_curve",
    "benchmark_system",
    "read_dataset",
    "solve_l1",
    "solve_l1_p1",
    "solve_l1_p2",
    "solve_l2",
    "solve_with_initial_state",
    "sparsity_report",
    "synth_paper_dataset",
    "write_dataset",
]
