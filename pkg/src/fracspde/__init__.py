"""Convolution-quadrature solvers for the stochastic time-fractional diffusion equation on (0, 1)."""

__version__ = "0.1.0"

from .cq import CQWeights, cq_weights, discrete_frac_derivative
from .experiments import (
    ConvergenceReport,
    FieldStats,
    expected_errors,
    run_convergence,
    run_deterministic_convergence,
    run_field_stats,
)
from .mild import (
    ContourAccuracyError,
    ContourConfig,
    kernel_contour,
    kernel_ml,
    mittag_leffler,
    mode_variance,
    one_step_variance,
    sum_bound_check,
    sum_tail_bound,
    wellposedness_tail,
)
from .noise import NoisePaths, coarsen, coarsen_increments, generate_batch, generate_paths
from .spectrum import EigenBasis, eval_basis, interval_basis, li_yau_bound
from .stepper import (
    P1Mesh,
    PolynomialSource,
    SchemeConfig,
    Trajectory,
    l2_norm,
    solve_fem,
    solve_modal,
    step_modal,
)

__all__ = [name for name in dir() if not name.startswith("_")]
