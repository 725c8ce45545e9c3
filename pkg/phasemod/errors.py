"""Exception hierarchy shared by every phasemod module.

Two families: ``DomainError`` for inputs outside a model's range (a ``ValueError``)
and ``NumericError`` for computations that failed to converge (an ``ArithmeticError``).
The CLI maps the first to exit code 2 and the second to exit code 3.
"""


class PhaseModError(Exception):
    """Base class for all phasemod errors."""


# --- Domain Errors ---
class DomainError(PhaseModError, ValueError):
    """Input lies outside the domain of the model."""


class DegenerateDriveError(DomainError):
    """A parametric drive with zero (or negative) frequency."""


class ResonanceMismatchError(DomainError):
    """Drive frequencies or time-averaged qubit frequencies do not match."""

    def __init__(self, message: str, detuning: float | None = None):
        super().__init__(message)
        self.detuning = detuning


class NoSolutionError(DomainError):
    """An inversion was asked for a value the model cannot reach."""


class ModelValidityError(DomainError):
    """The configuration leaves the regime where the model applies."""


class NoZeroError(DomainError):
    """No sign change on the search bracket."""


class ConfigError(DomainError):
    """Invalid experiment configuration or input table."""


# --- Numeric Errors ---
class NumericError(PhaseModError, ArithmeticError):
    """A numerical procedure did not deliver the requested accuracy."""


class ConvergenceError(NumericError):
    """Iterative refinement ran out of budget."""


class StepSizeError(NumericError):
    """Integrator norm drift exceeded tolerance; a smaller dt is needed."""


class NoOscillationError(NumericError):
    """A trace has no detectable oscillation to fit."""
