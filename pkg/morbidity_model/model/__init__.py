"""Coefficient fields, priors and the joint log posterior."""

from .coefficients import (
    CoefficientField,
    FactorizedMean,
    assemble_B0,
    coefficient_at,
    coefficient_field,
    correlate_deviations,
    inverse_logit,
    linear_predictor,
    state_coefficients,
)
from .layout import ParameterLayout, VariantMask
from .posterior import (
    GradientCheckReport,
    PosteriorTarget,
    check_gradients,
    log_likelihood,
    log_posterior,
    pointwise_loglik,
)
from .priors import (
    from_unconstrained,
    log_prior,
    log_prior_unconstrained,
    sample_prior,
    to_unconstrained,
)
from .state import ParameterState

__all__ = [
    "ParameterLayout",
    "VariantMask",
    "ParameterState",
    "FactorizedMean",
    "CoefficientField",
    "assemble_B0",
    "correlate_deviations",
    "coefficient_field",
    "coefficient_at",
    "state_coefficients",
    "linear_predictor",
    "inverse_logit",
    "log_prior",
    "log_prior_unconstrained",
    "to_unconstrained",
    "from_unconstrained",
    "sample_prior",
    "PosteriorTarget",
    "log_likelihood",
    "pointwise_loglik",
    "log_posterior",
    "check_gradients",
    "GradientCheckReport",
]
