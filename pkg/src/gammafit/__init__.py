"""Optimal Gamma-invariant subspaces for signals on finite abelian groups (Z_N)^d."""
from .crystal import build_crystal
from .errors import GammafitError, NumericalError, ValidationError
from .fibers import defiberize, fiberize
from .solver import (error_functional, orthogonal_decompose, parsevalize, project,
                     range_function, solve_optimal)

__version__ = "0.1.0"

__all__ = ["build_crystal", "fiberize", "defiberize", "range_function", "parsevalize",
           "orthogonal_decompose", "error_functional", "solve_optimal", "project",
           "GammafitError", "ValidationError", "NumericalError"]
