"""Pseudospectral solver for the prolonged DLSS equation with stochastic and exact cross-checks.

Subpackages and modules:

* :mod:`pdlss.spectral`, :mod:`pdlss.pde` - grids, derivatives and the RK4 solver
* :mod:`pdlss.diagnostics` - moments, Fisher information, normalised profiles, fits
* :mod:`pdlss.special` - Airy, Hastings-McLeod and the GOE Tracy-Widom density
* :mod:`pdlss.oracle` - exact solutions and residuals
* :mod:`pdlss.stochastic` - spin-chain dynamics, exact stationary laws, simulation
* :mod:`pdlss.invariant` - exact rational laws of the first particles
* :mod:`pdlss.cli` - the ``pdlss`` command
"""

from .errors import (ConfigurationError, ConsistencyError, ContractViolation, DegenerateInputError,
                     DomainError, FitError, InstabilityError, PdlssError, PositivityError, RangeError,
                     SolverError)
from .pde import SolverParams, Trajectory, solve
from .spectral import Grid, SampledFunction, make_grid

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "ConsistencyError", "ContractViolation", "DegenerateInputError", "DomainError",
    "FitError", "Grid", "InstabilityError", "PdlssError", "PositivityError", "RangeError", "SampledFunction",
    "SolverError", "SolverParams", "Trajectory", "make_grid", "solve", "__version__",
]
