"""Feedback sum-rate capacity and upper bounds for Gaussian multiple-access channels."""
from .cutset_bounds import (
    cut_curve,
    cutset_sum_bound,
    general_cut,
    three_user_cuts,
    two_user_cuts,
    two_user_feedback_sum_capacity,
)
from .dependence_balance import depbal_feasible, dual_bound, h_value, inner_min, s_lambda_gaussian
from .errors import DomainError, GMACError, InfeasibilityError, PSDViolationError, SingularityError
from .gaussian_core import (
    ChannelConfig,
    CovarianceMatrix,
    Partition,
    RateValue,
    Unit,
    build_covariance,
    conditional_output_variance,
    mutual_info_all,
    mutual_info_conditional,
    output_variance,
)
from .symmetric_capacity import ell, lambda_star, solve_beta, sum_capacity

__version__ = "0.1.0"
