"""Exception hierarchy shared by the numerical modules."""


class EmDecayError(Exception):
    """Base class for all library errors."""


class DomainError(EmDecayError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ComputationError(EmDecayError, ArithmeticError):
    """Overflow or non-finite intermediate result."""


class ToleranceNotMetError(EmDecayError):
    """Adaptive procedure stopped before reaching its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ModelRejectedError(EmDecayError):
    """The angular operator violates the hypothesis mu_1 >= 0."""

    exit_code = 2


class HardyRangeError(ModelRejectedError):
    """mu_1 is negative but still above -(n-2)^2/4.

    Kept distinct from the plain rejection so the boundary between
    "form still positive" and "no Friedrichs extension" stays visible.
    """


class ResolutionError(EmDecayError):
    """Galerkin eigenvalues did not converge under basis doubling."""

    exit_code = 3


class CertificateError(EmDecayError):
    """Kernel truncation cannot be certified, or a point lies outside it."""


class InsufficientEigenpairsError(CertificateError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class OutOfCertificateError(CertificateError, ValueError):
    pass


class OracleFailure(EmDecayError):
    """The independent time-stepping oracle became unstable."""
