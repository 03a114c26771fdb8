"""Model registry, paths, random streams and simulators."""

from .models import (
    DIFFUSION_FAMILIES,
    DRIFT_FAMILIES,
    InitialLaw,
    ModelSpec,
    make_model,
    model_from_dict,
)
from .paths import BrownianPath, GridPath, cell_grid, check_grid, uniform_grid
from .rng import replicate_normals, stream
from .simulate import (
    EulerTrajectory,
    euler_from_brownian,
    euler_maruyama,
    euler_recursion,
    refine_brownian,
    sample_brownian,
    sampling_indices,
    simulate_diffusion,
    simulate_euler,
)

__all__ = [
    "DIFFUSION_FAMILIES", "DRIFT_FAMILIES", "InitialLaw", "ModelSpec", "make_model",
    "model_from_dict", "BrownianPath", "GridPath", "cell_grid", "check_grid", "uniform_grid",
    "replicate_normals", "stream", "EulerTrajectory", "euler_from_brownian",
    "euler_maruyama", "euler_recursion", "refine_brownian", "sample_brownian",
    "sampling_indices", "simulate_diffusion", "simulate_euler",
]
