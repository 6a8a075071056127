"""Exception hierarchy.

Validation problems derive from ``ValueError`` and numerical failures from
``RuntimeError``; the command line maps them to exit codes 2 and 3.
"""


class ValidationError(ValueError):
    """An input violates a documented invariant or precondition."""


class PreconditionError(ValidationError):
    """A numerical routine was called outside its admissible input set."""


class NumericalError(RuntimeError):
    """Base class for numerical failures."""


class ConvergenceError(NumericalError):
    pass


class BracketViolation(NumericalError):
    """An iterate left the ``[lower, upper]`` bracket."""


class SingularityBreach(NumericalError):
    """The singular term was evaluated at a nonpositive argument."""


class SearchExhausted(NumericalError):
    """Constant search ran out of steps; ``trajectory`` holds the margins."""

    def __init__(self, message, trajectory=()):
        super().__init__(message)
        self.trajectory = list(trajectory)
