"""Exception hierarchy shared by all cvtele modules."""


class CVTeleError(Exception):
    """Base class for every error raised by cvtele."""


class InvalidArgumentError(CVTeleError, ValueError):
    """An argument is outside the domain of the operation."""


class UncertaintyViolationError(InvalidArgumentError):
    """A covariance matrix violates the uncertainty relation."""


class NotSymplecticError(InvalidArgumentError):
    """A matrix handed to a symplectic operation does not preserve the symplectic form."""


class UndefinedGainError(CVTeleError, ArithmeticError):
    """A normalized gain was requested for a quadrature whose input mean is zero."""


class ScenarioError(CVTeleError, ValueError):
    """A scenario description is malformed or incomplete.

    ``problems`` holds one human-readable diagnostic per offending field.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ConvergenceError(CVTeleError, RuntimeError):
    """The calibration fitter hit its iteration cap; ``best`` carries the best result found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
