"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid configuration (bad enum value, odd particle count, ...)."""


class AdmissibilityError(ValueError):
    """A coupling violates its admissibility constraints."""


class DivergenceError(RuntimeError):
    """A simulated state left the admissible region."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"simulation diverged at step {step}")
