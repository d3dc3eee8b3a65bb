"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class SingularInputError(DomainError):
    """The requested evaluation point sits on a singularity of the kernel."""


class InvalidWeightError(ValueError):
    """A conformal weight is nonpositive or otherwise unusable."""


class SolverFailureError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EmptyDomainError(RuntimeError):
    """The flow domain is not resolvable on the current grid."""


class ChartBuildError(RuntimeError):
    """A trajectory of the exponential-map chart could not be advanced."""

    def __init__(self, message, ring=None, angle=None):
        super().__init__(message)
        self.ring = ring
        self.angle = angle
