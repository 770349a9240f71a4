"""Spin-pair dynamics, square-field matrices, and curvature verification."""

from .lattice import (
    LatticeParams,
    NoiseStream,
    SpinConfiguration,
    normal_cdf,
    run_discrete,
    run_poissonized,
    step,
)
from .kernels import (
    KernelMatrix,
    SiteMarginals,
    kernel_from_json,
    kernel_to_json,
    mc_poissonized_two_point_kernel,
    mc_two_point_kernel,
    poisson_weights,
    poissonized_kernel_k0,
    site_marginals_k0,
    step_autocorrelation,
    two_point_kernel_k0,
)
from .gamma import (
    GammaPair,
    decompose,
    explicit_starred_k0,
    gamma_of_f,
    pair_matrices_k0,
    similarity_check_k0,
    starred,
    starred_pair_k0,
)
from .mcgamma import estimate_pair_bundle, estimate_state_matrices
from .curvature import (
    CurvatureK0Report,
    RhoEstimate,
    quadratic_lambda2_k0,
    rho_k0,
    rho_ladder,
    rho_sampled,
    symmetric_eigs,
)
from .verify import (
    CouplingSchedule,
    TwoPointFunction,
    bound_time_integral,
    check_local_poincare,
    correlation_bound_check,
    endpoint_pattern_counts,
    ergodic_limit_probe,
    expected_gamma,
    pair_indicator,
    pair_product,
    pair_sum,
    variance_under_pt,
)

__version__ = "0.1.0"
