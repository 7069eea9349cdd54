"""Exception types shared across the library."""


class NrmError(Exception):
    """Base class for all library-specific errors."""


class DomainError(NrmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SizeLimitError(NrmError, ValueError):
    """A combinatorial operation exceeds its hard size cap."""


class CapabilityError(NrmError, RuntimeError):
    """The prior family does not support the requested operation."""


class IntegrationError(NrmError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class PrecisionError(NrmError, RuntimeError):
    """A series or special-function evaluation lost too much precision."""
