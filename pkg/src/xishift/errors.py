"""Exception hierarchy shared by all modules."""


class XiShiftError(Exception):
    """Base class for every error raised by this package."""


class HermiticityError(XiShiftError, ValueError):
    pass


class NotPSDError(XiShiftError, ValueError):
    """A matrix that must be positive semidefinite has a negative eigenvalue."""

    def __init__(self, msg, eigenvalue=None):
        super().__init__(msg)
        self.eigenvalue = eigenvalue


class EigenConvergenceError(XiShiftError, ArithmeticError):
    def __init__(self, msg, info=None):
        super().__init__(msg)
        self.info = info


class EndpointCollisionError(XiShiftError, ValueError):
    """An eigenvalue sits on an open endpoint of a spectral interval."""

    def __init__(self, msg, eigenvalue=None, endpoint=None):
        super().__init__(msg)
        self.eigenvalue = eigenvalue
        self.endpoint = endpoint


class DomainError(XiShiftError, ValueError):
    pass


class ProjectionError(XiShiftError, ValueError):
    """Input is not an orthogonal projection within tolerance."""


class SingularMatrixError(XiShiftError, ArithmeticError):
    pass


class NotDissipativeError(XiShiftError, ValueError):
    pass


class QuadratureConfigError(XiShiftError, ValueError):
    pass


class ConsistencyError(XiShiftError, AssertionError):
    """Two independent evaluations of the same quantity disagree."""


class HypothesisViolation(XiShiftError, ValueError):
    """The flow instance admits no invertible reference point."""


class AdmissibilityError(XiShiftError, ValueError):
    """A spectral parameter lies outside the admissible set of an operation."""

    def __init__(self, msg, blocking=None):
        super().__init__(msg)
        self.blocking = blocking


class ProblemFormatError(XiShiftError, ValueError):
    pass
