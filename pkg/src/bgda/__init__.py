"""Bregman descent-ascent optimizers for balancing competing training losses.

The package treats multi-loss training as a saddle-point problem: minimize
over model parameters, maximize over simplex weights regularized by a
Bregman divergence to reference weights.  It ships the optimizer family
(plain, adaptive, stochastic, and a fixed-weight baseline), the simplex prox
machinery, a small self-contained autodiff engine for dense nets with
second-order input derivatives, desk-scale PDE testbeds, and synthetic
quadratic instances with certified constants for verifying the optimizer's
per-step and rate guarantees.
"""

from .autodiff import Activation, Mlp, fd_check, forward, forward_batch, grad_params, input_derivatives
from .bregman import (
    EPS_PI,
    DistanceGenerator,
    WeightDomain,
    divergence,
    prox_restricted,
    prox_simplex_kl,
    three_point_residual,
)
from .exceptions import (
    ConfigError,
    DegenerateReferenceError,
    DomainError,
    NumericError,
    SolverFailureError,
    UsageError,
)
from .optim import (
    AdaptiveBregmanDescentAscent,
    BregmanDescentAscent,
    FixedWeightAdaptiveBaseline,
    OptimizerState,
    RunTrace,
    StochasticBregmanDescentAscent,
    linear_decay,
    theoretical_stepsizes,
)
from .pinn import (
    CollocationSet,
    PdeSpec,
    builtin_problems,
    chi_windows,
    conflict_ratio,
    get_problem,
    l2re,
    loss_terms,
    sample_collocation,
)
from .saddle import (
    SaddleProblem,
    SmoothnessInfo,
    best_response,
    grad_pi,
    grad_theta,
    objective,
    phi_and_grad,
)
from .synthetic import (
    QuadraticMinimax,
    gaussian_batch_oracle,
    make_quadratic,
    quadratic_instance,
    restricted_smoothness,
    stationarity,
    verify_contraction,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "AdaptiveBregmanDescentAscent",
    "BregmanDescentAscent",
    "CollocationSet",
    "ConfigError",
    "DegenerateReferenceError",
    "DistanceGenerator",
    "DomainError",
    "EPS_PI",
    "FixedWeightAdaptiveBaseline",
    "Mlp",
    "NumericError",
    "OptimizerState",
    "PdeSpec",
    "QuadraticMinimax",
    "RunTrace",
    "SaddleProblem",
    "SmoothnessInfo",
    "SolverFailureError",
    "StochasticBregmanDescentAscent",
    "UsageError",
    "WeightDomain",
    "best_response",
    "builtin_problems",
    "chi_windows",
    "conflict_ratio",
    "divergence",
    "fd_check",
    "forward",
    "forward_batch",
    "gaussian_batch_oracle",
    "get_problem",
    "grad_params",
    "grad_pi",
    "grad_theta",
    "input_derivatives",
    "l2re",
    "linear_decay",
    "loss_terms",
    "make_quadratic",
    "objective",
    "phi_and_grad",
    "prox_restricted",
    "prox_simplex_kl",
    "quadratic_instance",
    "restricted_smoothness",
    "sample_collocation",
    "stationarity",
    "theoretical_stepsizes",
    "three_point_residual",
    "verify_contraction",
]
