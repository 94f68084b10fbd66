"""Baskakov-Durrmeyer type operators built on Boas-Buck generating functions."""

from .bbsystem import (
    BoasBuckSystem,
    builtin_system,
    load_system,
    p_of_x,
    resolve_system,
    theta_values,
    validate_system,
    weight_distribution,
)
from .moments import central_moments, discrete_moments, durrmeyer_moments, limit_estimates
from .operators import (
    OperatorConfig,
    apply_discrete,
    apply_durrmeyer,
    apply_szasz_durrmeyer,
    evaluate,
    kernel_cdf,
)
from .special import QuadratureSpec

__version__ = "0.1.0"
