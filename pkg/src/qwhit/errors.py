"""Exception hierarchy shared by all modules.

The CLI maps each class to a distinct exit status.
"""


class QWalkError(Exception):
    """Base class for library errors."""


class SizeError(QWalkError, ValueError):
    """A size parameter (dimension, vertex count) is out of range."""


class UnsupportedDimensionError(QWalkError, ValueError):
    """A coin family does not exist in the requested dimension."""


class ConfigurationError(QWalkError, ValueError):
    """Incompatible components, e.g. coin dimension != graph degree."""


class DomainError(QWalkError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ReachabilityError(QWalkError, ValueError):
    """The target vertex cannot be reached from the start vertex."""


class ResourceError(QWalkError, MemoryError):
    """A computation would exceed a configured size budget."""


class NumericalError(QWalkError, ArithmeticError):
    """A solver failed to converge or produced an inconsistent result."""


class ConsistencyError(NumericalError):
    """A quantity that must be real (or normalized) is not, within tolerance."""


class PrecisionError(NumericalError):
    """Fixed-precision arithmetic overflowed; use exact mode."""
