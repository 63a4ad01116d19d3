"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations

from typing import Optional


class TransportError(Exception):
    """Base class for every error raised by trial_transport."""

    def __init__(self, message: str, *, row: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.row = row

    def __str__(self) -> str:
        if self.row is None:
            return self.message
        return f"{self.message} (row {self.row})"


class ValidationError(TransportError, ValueError):
    """Input data or arguments violate a documented invariant."""


class SchemaError(ValidationError):
    """A declared column is missing or cannot be parsed."""


class DesignError(ValidationError):
    """Covariate vectors or index lists do not match the fitted design."""


class ConfigError(ValidationError):
    """Unknown or ill-typed configuration key."""

    def __init__(self, message: str, *, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class NotApplicableError(ValidationError):
    """The requested analysis does not apply to the data at hand."""


class EstimatorMismatchError(ValidationError):
    """Arm estimates produced by different estimators were combined."""


class MissingModelError(ValidationError):
    """A nuisance model required for the requested arm is absent."""


class ModelFitError(TransportError):
    """A nuisance regression could not be fitted."""


class SingularDesignError(ModelFitError):
    """Design matrix is rank deficient."""

    def __init__(self, message: str, *, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class DegenerateOutcomeError(ModelFitError):
    """A categorical response has a single observed class."""


class SeparationError(ModelFitError):
    """Maximum likelihood estimates diverge (complete or quasi separation)."""


class SolverError(ModelFitError):
    """A root-finding problem could not be bracketed."""


class PositivityError(TransportError):
    """A probability used as a weight denominator sits on the boundary."""


class InferenceError(TransportError):
    """Too many bootstrap replicates failed."""


class SimulationError(TransportError):
    """Too many simulation replications failed."""


EXIT_CODES = (
    (ValidationError, 1),
    (ModelFitError, 2),
    (PositivityError, 2),
    (InferenceError, 3),
    (SimulationError, 3),
)


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the CLI exit status."""
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return 1
