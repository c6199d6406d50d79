"""Finite- and infinite-Prandtl magneto-convection in a 2D periodic channel.

Submodules:

``grid``, ``operators``, ``norms``   discretization and discrete norms
``stokes``                           Stokes solver, Leray projection, semigroup
``dynamics``                         full, limit and effective integrators
``convergence``                      error series, epsilon sweeps, rate fits
``io``, ``cli``, ``plotting``        configuration, file formats, command line
"""

from .dynamics import FlowState, ICPreset, ModelParams, SimulationError, Trajectory, run_model
from .grid import Grid, make_grid

__all__ = [
    "FlowState",
    "Grid",
    "ICPreset",
    "ModelParams",
    "SimulationError",
    "Trajectory",
    "make_grid",
    "run_model",
]
__version__ = "0.1.0"
