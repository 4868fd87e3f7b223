"""Exception types shared across the package."""


class JetCartanError(Exception):
    """Base class for all package errors."""


class DivisionByZero(JetCartanError):
    """A denominator is identically zero, or zero at an evaluation point."""


class UnboundSymbol(JetCartanError):
    """Evaluation point does not bind every symbol of the expression."""


class SamplingExhausted(JetCartanError):
    """No sample point satisfying the assumptions was found in the draw budget."""


class OrderOverflow(JetCartanError):
    """A jet beyond the configured truncation order was requested."""


class SingularJacobian(JetCartanError):
    """The horizontal total Jacobian of a transformation is singular."""


class MissingRule(JetCartanError):
    """No exterior-derivative rule registered for a generator or coefficient symbol."""


class MissingLinearization(JetCartanError):
    """Recurrence requested beyond the available linearization order."""


class NotSolvable(JetCartanError):
    """A normalization has no free Maurer-Cartan generator with invertible coefficient."""


class AmbiguousSolve(JetCartanError):
    """A normalization without a solve-for directive has several candidates."""


class IncompleteFrame(JetCartanError):
    """Generator extraction requires all group parameters below the horizontal order solved."""


class InconsistentSystem(JetCartanError):
    """Two solved forms for one principal jet disagree."""


class Undetermined(JetCartanError):
    """The declared order bound is too small to certify the requested property."""


class RankDeficient(JetCartanError):
    """A rank certification failed; carries the deficient block."""


class NegativeBound(JetCartanError):
    """A counting bound precondition (dimension inequality) is violated."""


class MonotonicityViolation(JetCartanError):
    """Cartan characters passed to the test are not non-increasing."""


class ParseError(JetCartanError):
    """Problem-file syntax error with position information."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = "line %s, col %s: %s" % (line, col, message)
        super().__init__(message)


class UndeclaredSymbol(JetCartanError):
    """A problem file refers to a symbol that was never declared."""
