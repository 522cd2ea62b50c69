"""Numerical study of local eigenvalue statistics for unitary matrix models
``exp(-n Tr V((U + U*)/2))``: orthonormal functions on the circle, the
reproducing kernel, the equilibrium density, sine-kernel convergence
experiments and exact eigenvalue sampling."""
from ._backend import BACKEND
from .equilibrium import solve_density
from .errors import UMPError
from .kernel import KernelEvaluator
from .opuc import build_basis
from .potential import Potential
from .quadrature import PeriodicGrid

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "KernelEvaluator",
    "PeriodicGrid",
    "Potential",
    "UMPError",
    "build_basis",
    "solve_density",
]
