"""Exception hierarchy shared by all zetalab modules."""


class ZetaLabError(Exception):
    """Base class for every error raised by zetalab."""


class DomainError(ZetaLabError, ValueError):
    """Input outside the domain of the function (pole of Gamma, n = 0, ...)."""


class PoleError(DomainError):
    """Evaluation requested exactly at a pole (zeta at s = 1, ...)."""


class RegionError(DomainError):
    """A series representation was used outside its region of convergence."""


class DivergenceError(RegionError):
    """A series that needs Im x > 0 (or Re s > 1) was asked to diverge."""


class TruncationError(ZetaLabError):
    """A truncated sum or integral cannot meet the requested tolerance."""


class BudgetError(TruncationError):
    """Work budget (nodes, terms) exceeded; the message suggests a split."""


class BranchError(ZetaLabError):
    """Integrand failed to decay, usually a wrong branch of a complex power."""


class GeometryError(ZetaLabError):
    """Contour geometry is degenerate (ray too close to a pole, ...)."""


class FitError(ZetaLabError):
    """Least-squares design is ill-conditioned."""


class VerificationError(ZetaLabError):
    """A numerical verification failed; ``failures`` lists offending inputs."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)
