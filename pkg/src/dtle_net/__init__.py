"""Distributed solver for the discrete-time Lyapunov equation ``A X A' - X + Q = 0``.

Agents each hold a row block of ``A`` and a column block of ``Q`` and cooperate
over a time-varying undirected network, combining a consensus step with a
local gradient step under their own constant step sizes.
"""

from ._backend import BACKEND
from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    DTLENetError,
    EstimationError,
    GraphError,
    NoUniqueSolutionError,
    ParameterError,
    PartitionError,
    ScheduleError,
    SingularMatrixError,
)
from .fixtures import generate_random_problem, list_fixtures, load_fixture
from .network import (
    metropolis_adjacency,
    schedule_finite_connected,
    schedule_uniformly_connected,
    verify_schedule,
    weight_matrix,
)
from .oracle import build_quadratic, check_quadratic, solve_centralized
from .problem import AgentEstimate, DTLEProblem, LocalData, Partition, decompose
from .solver import Trajectory, estimate_linear_rate, init_state, run, step

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AgentEstimate",
    "ConfigError",
    "DTLENetError",
    "DTLEProblem",
    "DimensionError",
    "DivergenceError",
    "EstimationError",
    "GraphError",
    "LocalData",
    "NoUniqueSolutionError",
    "ParameterError",
    "Partition",
    "PartitionError",
    "ScheduleError",
    "SingularMatrixError",
    "Trajectory",
    "build_quadratic",
    "check_quadratic",
    "decompose",
    "estimate_linear_rate",
    "generate_random_problem",
    "init_state",
    "list_fixtures",
    "load_fixture",
    "metropolis_adjacency",
    "run",
    "schedule_finite_connected",
    "schedule_uniformly_connected",
    "solve_centralized",
    "step",
    "verify_schedule",
    "weight_matrix",
]
