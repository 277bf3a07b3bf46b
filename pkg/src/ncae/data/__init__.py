"""Dataset generation and serialisation for the Lorenz96 and pendulum experiments."""
from .core import Dataset, DivergenceError, Trajectory, rk4_step
from .lorenz96 import (
    REGIMES, Lorenz96Config, build_lorenz_dataset, generate_lorenz96, lorenz96_rhs, lorenz_forcings,
)
from .pendulum import (
    PendulumConfig, build_pendulum_dataset, coupling, coupling_context, coupling_jacobian,
    coupling_standard, simulate_pendulum,
)
from .storage import dataset_read, dataset_write

__all__ = [
    "Dataset", "DivergenceError", "Trajectory", "rk4_step",
    "REGIMES", "Lorenz96Config", "build_lorenz_dataset", "generate_lorenz96", "lorenz96_rhs",
    "lorenz_forcings",
    "PendulumConfig", "build_pendulum_dataset", "coupling", "coupling_context", "coupling_jacobian",
    "coupling_standard", "simulate_pendulum",
    "dataset_read", "dataset_write",
]
