"""Numerical laboratory for subordinate killed fractional Laplacians on an interval.

The operator ``psi(-L_|D)`` is realized through the spectral calculus of a
discretized restricted fractional Laplacian; on top of it sit Green and
Poisson kernels, boundary-rate fits and fixed-point solvers for the
semilinear problem with boundary blow-up data.
"""

__version__ = "0.1.0"

from .bernstein import BernsteinSpec, Family, Role, relativistic, stable, tempered
from .discretize import Grid, OperatorMatrix, assemble_generator, build_grid
from .errors import (ConfigError, DomainError, InconsistencyError, InfeasibleDataError, NlslabError,
                     NumericalError, PreconditionError)
from .kernels import BoundaryData, PoissonKernel
from .lab import Lab, build_lab
from .spectral import Spectrum, eigendecompose, green_matrix

__all__ = [
    "BernsteinSpec", "Family", "Role", "stable", "relativistic", "tempered",
    "Grid", "OperatorMatrix", "build_grid", "assemble_generator",
    "Spectrum", "eigendecompose", "green_matrix",
    "BoundaryData", "PoissonKernel", "Lab", "build_lab",
    "NlslabError", "ConfigError", "DomainError", "NumericalError", "PreconditionError",
    "InfeasibleDataError", "InconsistencyError",
]
