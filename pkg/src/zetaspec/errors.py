"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`NumericalError` to exit code 2.
"""

from __future__ import annotations


class ZetaSpecError(Exception):
    """Base class for all library errors."""


class ValidationError(ZetaSpecError, ValueError):
    """Bad input: malformed files, violated preconditions, domain errors."""


class CapacityError(ValidationError):
    """A request exceeds a configured resource limit (e.g. sieve size)."""


class NumericalError(ZetaSpecError, ArithmeticError):
    """A numerical stage failed to converge or lost consistency."""

    def __init__(self, message: str, stage: str = "numerics"):
        super().__init__(message)
        self.stage = stage


class QuadratureError(NumericalError):
    """Adaptive quadrature ran out of subdivisions.

    ``partial`` holds the best estimate reached before giving up.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message, stage="quadrature")
        self.partial = partial


class DegenerateConstraintError(NumericalError):
    def __init__(self, message: str):
        super().__init__(message, stage="constraint")
