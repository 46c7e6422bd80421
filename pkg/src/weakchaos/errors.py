"""Exception types shared across the package."""


class WeakChaosError(Exception):
    """Base class for all package-specific errors."""


class DomainError(WeakChaosError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ParseError(WeakChaosError, ValueError):
    """Malformed map/partition/config mini-language input."""

    def __init__(self, message, text=None, position=None, line=None):
        self.text = text
        self.position = position
        self.line = line
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif position is not None:
            where = f" (column {position})"
        super().__init__(message + where)


class PassageBudgetError(WeakChaosError):
    """A first-passage search exceeded its iteration budget.

    Signals a starting point numerically indistinguishable from the
    indifferent fixed point at 0 on the requested time scale.
    """


class ConvergenceError(WeakChaosError):
    """Root finding or series evaluation failed to converge."""


class MalformedStreamError(WeakChaosError, ValueError):
    """A coded bitstream cannot be decoded (truncated or inconsistent)."""


class InconclusiveTailError(WeakChaosError):
    """A tabulated cell sequence has no declared tail, so the requested
    asymptotic quantity cannot be classified."""


class UnsupportedRegimeError(WeakChaosError):
    """The scaling regime is a boundary case with no prediction."""


class DegenerateFitError(WeakChaosError):
    """Exponent fitting received constant or empty data."""


class InsufficientTailError(WeakChaosError):
    """Too few tail observations to fit a tail exponent."""
