"""Bayesian estimation of scale parameters with quantum probes.

The package computes the exact attainable minimum of the mean squared
logarithmic error for a parameter encoded in a family of density matrices,
constructs the measurement and estimator that reach it, certifies or refutes
the optimality of user-supplied measurements, and simulates repeated-shot
Bayesian protocols. Equilibrium thermometry ships as the worked physical
example.
"""

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NumericalFailureError, QseError, ValidationError
from .numerics import (
    EigenSystem,
    Grid,
    eig_hermitian,
    is_psd,
    lyapunov_residual,
    make_log_grid,
    solve_lyapunov,
)
from .models import (
    POM,
    Estimator,
    ParameterizedState,
    PriorDensity,
    check_pom,
    custom_prior,
    delta_prior,
    flat_prior,
    jeffreys_prior,
    log_flat_prior,
    log_normal_prior,
    posterior,
)
from .estimation import (
    HHCertificate,
    MinimumReport,
    OperatorMoments,
    OptimalStrategy,
    evaluate_mle,
    hh_certificate,
    jensen_gap,
    minimum_error,
    operator_moments,
    optimal_strategy,
    scale_observable,
    variational_objective,
)
from .thermometry import (
    HamiltonianSpec,
    RTable,
    r_coefficients,
    thermal_state_family,
    thermometry_optimum,
)
from .assessment import (
    AssessmentReport,
    classify,
    info_gain_J,
    info_gain_K,
    info_gain_K_operator_form,
    optimal_estimator,
    prior_estimate,
    prior_uncertainty,
)
from .multishot import (
    PosteriorState,
    Trajectory,
    exact_multishot_error,
    experimental_error,
    sequential_estimate,
    simulate,
    simulate_batch,
    update,
)
from .multiparam import (
    MultiBoundReport,
    MultiMomentSet,
    MultiPrior,
    evaluate_multi_mle,
    jeffreys_product_prior,
    multi_bound,
    multi_deviation,
    multi_moments,
    optimal_multi_estimators,
    product_prior,
    tensor_product_states,
)

__version__ = "0.1.0"
