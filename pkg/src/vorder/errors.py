"""Exception types shared across the package."""


class VorderError(Exception):
    """Base class for all package errors."""


class DomainError(VorderError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class BranchError(DomainError):
    """Argument lies on a branch cut or outside the holomorphy strip."""


class PrecisionError(VorderError, ArithmeticError):
    """Requested accuracy cannot be delivered."""


class OraclePrecisionError(PrecisionError):
    """Quadrature escalation did not converge; carries the best estimate."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class GenericityError(VorderError):
    """No direction satisfying the genericity constraints was found."""


class SeparationError(VorderError):
    """A point cannot be separated from the rest of a polytope."""


class GeometryError(VorderError, ValueError):
    """Inconsistent or degenerate geometric input."""


class MeshError(VorderError, ValueError):
    """Mesh generation failed or produced a degenerate mesh."""


class NumericsError(VorderError, ArithmeticError):
    """A solver failed to reach its tolerance."""


class ContractError(VorderError, TypeError):
    """An object does not carry the data an operation requires."""


class UnsupportedError(VorderError, NotImplementedError):
    """Input is valid but outside what this implementation handles."""


class ConfigurationError(VorderError, ValueError):
    """Invalid or out-of-range configuration value."""


class IdentifiabilityWarning(UserWarning):
    """Fitted parameters are not locally identifiable from the data."""
