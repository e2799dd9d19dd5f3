"""
Exception hierarchy for conemorse.

Every error carries an ``exit_code`` so the CLI can map failures onto its
contract: 2 for input validation failures, 3 for numerical invariants that
did not hold.
"""

VALIDATION_EXIT = 2
NUMERICAL_EXIT = 3


class ConeMorseError(Exception):
    """Base class for all conemorse errors."""

    exit_code = NUMERICAL_EXIT


class NonFiniteEntry(ConeMorseError, ValueError):
    exit_code = VALIDATION_EXIT


class ShapeMismatch(ConeMorseError, ValueError):
    exit_code = VALIDATION_EXIT


class NotAComplex(ConeMorseError):
    """Raised when a differential does not square to zero."""


class NotAChainMap(ConeMorseError):
    """Raised when a map fails the commutation relation with the differentials."""


class DegenerateSystem(ConeMorseError):
    pass


class InexactDivision(ConeMorseError):
    """(1+t) does not divide the Morse polynomial numerator."""

    def __init__(self, message, numerator=None):
        super().__init__(message)
        self.numerator = numerator


class NegativeCoefficient(ConeMorseError):
    def __init__(self, message, quotient=None):
        super().__init__(message)
        self.quotient = quotient


class BoundaryNotSquareZero(ConeMorseError):
    exit_code = VALIDATION_EXIT


class LeibnizViolation(ConeMorseError):
    exit_code = VALIDATION_EXIT


class InvalidRanks(ConeMorseError):
    exit_code = VALIDATION_EXIT


class SchemaError(ConeMorseError):
    exit_code = VALIDATION_EXIT


class InvalidScene(ConeMorseError, ValueError):
    exit_code = VALIDATION_EXIT


class InequalityViolated(ConeMorseError):
    """At least one recorded inequality failed; the full report is attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonTransverseSuspected(ConeMorseError):
    pass


class DidNotConverge(ConeMorseError):
    pass


class PoleSingularity(ConeMorseError):
    pass


class CrossCheckFailed(ConeMorseError):
    """Two independent computations of the same quantity disagree."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
