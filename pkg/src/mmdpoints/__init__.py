"""Stationary MMD point sets.

Approximate a target distribution with n particles by driving the squared
maximum mean discrepancy to a stationary point via (noisy) particle
descent, then use the points for numerical integration.  Includes i.i.d.,
kernel-herding and support-point baselines, test integrands with exact
integrals, and a benchmark harness with log-log rate fitting.
"""

__version__ = "0.1.0"

from .baselines import (
    HerdingConfig,
    SupportPointsConfig,
    energy_distance,
    iid_points,
    kernel_herding,
    support_points,
)
from .bench import (
    ConfigError,
    ExperimentConfig,
    RateFit,
    ResultRow,
    cell_seed,
    fit_rate,
    load_config,
    load_dataset,
    parse_target,
    read_results,
    run_experiment,
    summarize,
    write_results,
)
from .descent import (
    AdaptiveNoise,
    DescentConfig,
    DescentResult,
    DivergenceError,
    NoiseCheck,
    NoNoise,
    NonFiniteUpdateError,
    PowerLawNoise,
    StepSizeCheck,
    TrajectoryRecord,
    beta_at,
    check_noise_level,
    check_step_size,
    descent_step,
    origin_init,
    run_descent,
)
from .integrands import (
    F1,
    F2,
    GradSpan,
    RkhsElement,
    eval_integrand,
    integration_error,
    parse_integrand,
    rkhs_norm,
    true_integral,
)
from .kernels import (
    CenteredKernel,
    Gaussian,
    InverseMultiquadric,
    Matern32,
    center,
    kernel_spec,
    parse_kernel,
)
from .mmd import (
    MmdReport,
    as_point_set,
    grad_particles,
    gradient_field,
    mmd_squared,
    phi,
    stationarity_residual,
)
from .targets import (
    EmpiricalTarget,
    GaussianMixture,
    UnsupportedPairError,
    as_empirical,
    benchmark_mixture,
    double_integral,
    grad_mean_embedding,
    mean_embedding,
    sample,
)

__all__ = [
    "AdaptiveNoise",
    "CenteredKernel",
    "ConfigError",
    "DescentConfig",
    "DescentResult",
    "DivergenceError",
    "EmpiricalTarget",
    "ExperimentConfig",
    "F1",
    "F2",
    "Gaussian",
    "GaussianMixture",
    "GradSpan",
    "HerdingConfig",
    "InverseMultiquadric",
    "Matern32",
    "MmdReport",
    "NoNoise",
    "NoiseCheck",
    "NonFiniteUpdateError",
    "PowerLawNoise",
    "RateFit",
    "ResultRow",
    "RkhsElement",
    "StepSizeCheck",
    "SupportPointsConfig",
    "TrajectoryRecord",
    "UnsupportedPairError",
    "as_empirical",
    "as_point_set",
    "benchmark_mixture",
    "beta_at",
    "cell_seed",
    "center",
    "check_noise_level",
    "check_step_size",
    "descent_step",
    "double_integral",
    "energy_distance",
    "eval_integrand",
    "fit_rate",
    "grad_mean_embedding",
    "grad_particles",
    "gradient_field",
    "iid_points",
    "integration_error",
    "kernel_herding",
    "kernel_spec",
    "load_config",
    "load_dataset",
    "mean_embedding",
    "mmd_squared",
    "origin_init",
    "parse_integrand",
    "parse_kernel",
    "parse_target",
    "phi",
    "read_results",
    "rkhs_norm",
    "run_descent",
    "run_experiment",
    "sample",
    "stationarity_residual",
    "summarize",
    "support_points",
    "true_integral",
    "write_results",
]
