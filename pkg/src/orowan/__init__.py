"""Layer solutions, hull-function ansatz and cell-problem drift for a nonlocal
phase-field dislocation model with a half-Laplacian elastic term."""

from .cell import CellProblemConfig, estimate_lambda, evolve_cell, orowan_scan
from .corrector import solve_corrector
from .fractional import Grid1D, GridField, LevyQuadratureConfig
from .hull import HullParams, hull_value, nl_residual
from .layer import c0_constant, solve_layer
from .particles import ParticleState, integrate, lattice_mean_velocity, particle_rhs
from .potential import PotentialSpec, get_potential, make_standard_potential

__version__ = "0.1.0"
