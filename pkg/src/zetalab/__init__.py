"""Numerical checks of the second moment of zeta(1/2 + it) times a Dirichlet
polynomial: special functions, the Gamma smoothing kernel, Estermann
functions, Mellin/contour identities and the moment engine."""

__version__ = "0.1.0"

from .errors import (BranchError, BudgetError, DivergenceError, DomainError, FitError,  # noqa: F401
                     GeometryError, PoleError, RegionError, TruncationError,
                     VerificationError, ZetaLabError)
