"""Shared exception types."""


class InvalidInputError(ValueError):
    """Raised when an operation receives out-of-contract arguments."""


class ConfigError(ValueError):
    """Raised for malformed or unresolvable configuration."""


class NumericError(ArithmeticError):
    """Raised when a numerical procedure cannot proceed (step underflow etc.)."""


class DivergenceError(RuntimeError):
    """Raised when a simulation state leaves the admissible region.

    Attributes:
        time: simulation time at which divergence was detected [s]
        record: partial RunRecord logged up to the abort, or None
    """

    def __init__(self, time, record=None, message=None):
        self.time = time
        self.record = record
        super().__init__(message or f"state diverged at t={time:.6g} s")
