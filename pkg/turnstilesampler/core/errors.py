"""
Exception hierarchy for turnstilesampler.

Every error carries the process exit code the command-line front end
reports for it, so library code raises and the CLI only maps.
"""

from typing import Optional


class TurnstileSamplerError(Exception):
    """Base class for all turnstilesampler errors."""

    exit_code: int = 1


class ConfigurationError(TurnstileSamplerError):
    """Invalid or inconsistent configuration."""

    exit_code = 2


class InputError(TurnstileSamplerError):
    """Malformed or out-of-range stream input."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolation(TurnstileSamplerError):
    """A caller broke an operation's precondition."""

    exit_code = 2


class ContainerError(TurnstileSamplerError):
    """A serialized sketch container could not be decoded."""

    exit_code = 2


class MergeError(TurnstileSamplerError):
    """Two sketches or cells do not share configuration and randomness."""

    exit_code = 2


class ModelError(MergeError):
    """Operation not allowed for the sketch's stream model."""

    exit_code = 2


class CapacityError(TurnstileSamplerError):
    """Counter magnitudes could exceed the 128-bit cell capacity."""

    exit_code = 3


class RecoveryFailure(TurnstileSamplerError):
    """Full recovery did not verify; the structure held more than it can isolate."""

    exit_code = 4


class ExtractionError(TurnstileSamplerError):
    """No sample could be extracted after exhausting fallback levels."""

    exit_code = 4


class EstimationError(TurnstileSamplerError):
    """A statistic could not be computed from the available samples."""

    exit_code = 4
