"""Exception hierarchy shared by all subpackages.

The CLI maps ``ConfigError`` to exit code 2 and ``NumericalError`` to exit
code 3. Study drivers catch ``LabError`` per cell and keep going.
"""

from typing import Optional


class LabError(Exception):
    """Root of every error raised deliberately by this package."""


class ConfigError(LabError, ValueError):
    """Invalid, incomplete or missing configuration."""


class DomainError(LabError, ValueError):
    """Geometric precondition violated (dimension, boundary tolerance, inset size)."""


class BasisError(LabError, ValueError):
    """Wavelet family or basis cannot be built as requested.

    Attributes:
        minimal_level: Smallest feasible coarse level J0, when known
    """

    def __init__(self, message: str, minimal_level: Optional[int] = None):
        super().__init__(message)
        self.minimal_level = minimal_level


class MembershipError(LabError, ValueError):
    """A field violates the parameter-space constraints it must satisfy.

    Attributes:
        bound: Name of the violated bound
        value: Offending value
        limit: Limit the value had to respect
    """

    def __init__(self, message: str, bound: str = "", value: float = 0.0, limit: float = 0.0):
        super().__init__(message)
        self.bound = bound
        self.value = value
        self.limit = limit


class NumericalError(LabError, RuntimeError):
    """A numerical procedure failed (non-positive diffusivity, singular factor, no convergence)."""
