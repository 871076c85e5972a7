"""Kernel classifiers trained to maximize the margin in the input space.

The usual SVM maximizes the margin in its feature space; here the margin is
measured where the data lives, between the samples and the decision boundary,
optionally under a per-sample quadratic metric.  Training alternates between
projecting samples onto the current boundary and solving a linearized dual
QP, with the plain SVM as the starting point and as a special case.
"""

from .bench import BenchmarkParams, RunRecord, run_benchmark, write_report
from .data import Dataset, MixtureSpec, evaluate, gen_mixture, read_csv, write_csv
from .estimators import InputMarginSVC, KernelSVC, SimplifiedInputMarginSVC
from .exceptions import (
    ConvergenceError,
    DataFormatError,
    DegenerateGradientError,
    DegenerateSolutionError,
    InfeasibleProblemError,
    InMarginError,
    InvalidMetricError,
    ProjectionFailure,
    UnsupportedKernelError,
)
from .kernels import KernelSpec
from .metric import MetricField, quad_norm_sq
from .model import DiscriminantModel
from .projection import (
    MarginEstimate,
    ProjectionResult,
    approx_distance,
    estimate_margin,
    project_batch,
    project_hyperplane,
    project_point,
)
from .qp import DualProblem, DualSolution, bias_from_kkt, solve_dual, train_svm
from .simplified import simplified_g, train_simplified
from .temporals import TemporalVariables, build_dual, build_temporals, update_coefficients
from .trainer import StepRecord, TrainConfig, TrainTrace, train_input_margin

__version__ = "0.1.0"

__all__ = [
    "BenchmarkParams",
    "ConvergenceError",
    "DataFormatError",
    "Dataset",
    "DegenerateGradientError",
    "DegenerateSolutionError",
    "DiscriminantModel",
    "DualProblem",
    "DualSolution",
    "InMarginError",
    "InfeasibleProblemError",
    "InputMarginSVC",
    "InvalidMetricError",
    "KernelSVC",
    "KernelSpec",
    "MarginEstimate",
    "MetricField",
    "MixtureSpec",
    "ProjectionFailure",
    "ProjectionResult",
    "RunRecord",
    "SimplifiedInputMarginSVC",
    "StepRecord",
    "TemporalVariables",
    "TrainConfig",
    "TrainTrace",
    "UnsupportedKernelError",
    "approx_distance",
    "bias_from_kkt",
    "build_dual",
    "build_temporals",
    "estimate_margin",
    "evaluate",
    "gen_mixture",
    "project_batch",
    "project_hyperplane",
    "project_point",
    "quad_norm_sq",
    "read_csv",
    "run_benchmark",
    "simplified_g",
    "solve_dual",
    "train_input_margin",
    "train_simplified",
    "train_svm",
    "update_coefficients",
    "write_csv",
    "write_report",
]
