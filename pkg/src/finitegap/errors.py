"""Structured exceptions.

Every error carries a ``details`` dict so callers (and the CLI) can report
residuals, indices or offending values without parsing messages.
"""

from __future__ import annotations


class FiniteGapError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class ValidationError(FiniteGapError, ValueError):
    """Input data violates a documented invariant."""


class NumericalError(FiniteGapError, ArithmeticError):
    """A numerical procedure failed to deliver the requested accuracy."""


# validation
class GapOrdering(ValidationError):
    pass


class GapOutOfRange(ValidationError):
    pass


class LambdaStarOutOfRange(ValidationError):
    pass


class DivisorMismatch(ValidationError):
    pass


class SceneError(ValidationError):
    pass


class PoleAtLambdaStar(ValidationError):
    pass


class PoleAtZero(ValidationError):
    pass


class EvalAtPole(ValidationError):
    pass


class EvalOnSpectrum(ValidationError):
    pass


class InvariantViolation(ValidationError):
    pass


class WindowMismatch(ValidationError):
    pass


class DepthExceedsWindow(ValidationError):
    pass


# numerical
class NoConvergence(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class SingularPeriodMatrix(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class MassDeficit(NumericalError):
    pass


class LostPositivity(NumericalError):
    pass


class AmbiguousPole(NumericalError):
    pass


class StepFailure(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class SingularSection(NumericalError):
    pass


class SolverFailure(NumericalError):
    pass
