"""Constructive Markov kernels between a scalar diffusion and its Euler scheme."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GridMismatchError,
    HorizonError,
    InsufficientSamplesError,
    InvalidGridError,
    ModelBoundsWarning,
)
from .sde_core import GridPath, ModelSpec, make_model, model_from_dict

__all__ = [
    "__version__", "ConfigError", "GridMismatchError", "HorizonError",
    "InsufficientSamplesError", "InvalidGridError", "ModelBoundsWarning",
    "GridPath", "ModelSpec", "make_model", "model_from_dict",
]
