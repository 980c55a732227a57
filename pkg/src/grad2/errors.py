"""Exception hierarchy.

Errors fall in two families so the command line can map them to exit codes:
``InputError`` and its children are validation failures (bad shapes, bad
parameters, violated preconditions); ``NumericError`` and its children are
failures that only show up once the numbers are crunched.
"""


class Grad2Error(Exception):
    """Base class for every error raised by the package."""


class InputError(Grad2Error, ValueError):
    """Malformed input: wrong dimension, bad parameter, unknown kind."""


class ConstructionError(InputError):
    """A potential or system was built with an invalid combination."""


class PreconditionError(InputError):
    """An operation was called outside its documented domain."""


class ConfigurationError(InputError):
    """A run configuration cannot be carried out as described."""


class NumericError(Grad2Error, ArithmeticError):
    """Base class for failures discovered during computation."""


class HypothesisViolation(NumericError):
    """Sampled evidence contradicts a structural hypothesis on the potential."""


class StiffnessError(NumericError):
    """Adaptive step size fell below the configured minimum."""


class IntegrationOverflow(NumericError):
    """A non-finite value appeared in an integration."""


class BracketError(NumericError):
    """Bisection endpoints do not bracket a change of the predicate."""


class DegenerateFitError(NumericError):
    """Not enough usable data to fit a decay rate."""
