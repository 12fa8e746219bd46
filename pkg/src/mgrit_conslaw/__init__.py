"""Parallel-in-time solvers for 1-D scalar conservation laws."""

__version__ = "0.1.0"

from .grid import CFSplitting, Grid, periodic_index, space_time_norm
from .linearization import LinearizationMode
from .outer_solver import SolverConfig, outer_solve
from .problems import initial_cell_averages, make_discretization
from .time_integration import time_march

__all__ = [
    "CFSplitting",
    "Grid",
    "LinearizationMode",
    "SolverConfig",
    "initial_cell_averages",
    "make_discretization",
    "outer_solve",
    "periodic_index",
    "space_time_norm",
    "time_march",
]
