"""Numerical comparison of density-dependent one-step processes with their Fokker-Planck approximation."""

__version__ = "0.1.0"

from .errors import FokkerLabError, NumericalError, ValidationError  # noqa: E402
from .rates import BUILTIN_MODELS, InitialFunction, RateModel, load_model, validate_rate_model  # noqa: E402

__all__ = [
    "__version__",
    "FokkerLabError",
    "NumericalError",
    "ValidationError",
    "BUILTIN_MODELS",
    "InitialFunction",
    "RateModel",
    "load_model",
    "validate_rate_model",
]
