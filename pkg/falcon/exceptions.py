"""Custom exceptions for Falcon."""

from typing import Any, Dict, List, Optional


class FalconError(Exception):
    """Base exception for all Falcon errors."""

    exit_code: int = 1


class ArgumentError(FalconError):
    """Raised when an operation receives arguments outside its domain."""

    exit_code = 2


class ConfigurationError(FalconError):
    """Raised when configuration is invalid."""

    exit_code = 2


class DomainError(FalconError):
    """Raised when a point or value lies outside the domain of an object."""

    exit_code = 2

    def __init__(self, message: str, value: Optional[float] = None):
        super().__init__(message)
        self.value = value


class DepthCapError(FalconError):
    """Raised when a prefractal request exceeds the configured resource bounds."""

    exit_code = 3

    def __init__(self, message: str, depth: Optional[int] = None, cap: Optional[int] = None):
        super().__init__(message)
        self.depth = depth
        self.cap = cap


class StencilError(FalconError):
    """Raised when a difference stencil collapses onto a single staircase plateau."""

    exit_code = 3

    def __init__(self, message: str, x: Optional[float] = None, depth: Optional[int] = None):
        super().__init__(message)
        self.x = x
        self.depth = depth


class IntegrationError(FalconError):
    """Raised when an F^alpha-integral cannot be formed (e.g. non-finite samples)."""

    exit_code = 3


class ConvergenceError(FalconError):
    """Raised when a numeric scheme does not reach its tolerance."""

    exit_code = 3


class SingularSystemError(FalconError):
    """Raised when the initial-value system has a vanishing Wronskian."""

    exit_code = 3

    def __init__(self, message: str, wronskian: Optional[float] = None):
        super().__init__(message)
        self.wronskian = wronskian


class WronskianZeroError(FalconError):
    """Raised when a Wronskian vanishes inside the working range."""

    exit_code = 3


class UnsupportedTermError(FalconError):
    """Raised when a result would leave the exp-trig-power-log algebra."""

    exit_code = 4

    def __init__(self, message: str, term: Optional[Any] = None):
        super().__init__(message)
        self.term = term


class QuadratureFallback(UnsupportedTermError):
    """Signals that a term has no antiderivative inside the algebra.

    Callers are expected to switch to numeric quadrature.
    """


class ResonanceError(FalconError):
    """Raised when a forcing exponent is a characteristic root."""

    exit_code = 4

    def __init__(self, message: str, characteristic_value: Optional[complex] = None):
        super().__init__(message)
        self.characteristic_value = characteristic_value


class ProblemValidationError(FalconError):
    """Raised when a problem-spec document is malformed."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        missing_keys: Optional[List[str]] = None,
        unknown_keys: Optional[List[str]] = None,
        suggestions: Optional[Dict[str, str]] = None,
    ):
        super().__init__(message)
        self.missing_keys = missing_keys or []
        self.unknown_keys = unknown_keys or []
        self.suggestions = suggestions or {}


class FileProcessingError(FalconError):
    """Raised when reading or writing a file fails."""

    exit_code = 2

    def __init__(self, message: str, file_path: Optional[str] = None):
        super().__init__(message)
        self.file_path = file_path
